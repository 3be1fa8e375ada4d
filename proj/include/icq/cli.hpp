#pragma once

namespace icq {

/// Entry point of the `icq` command. Returns the process exit status:
/// 0 success, 1 internal error, 2 usage or validation error.
int run_cli(int argc, char** argv);

}  // namespace icq
