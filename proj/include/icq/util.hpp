#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace icq {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Reads a whole file; throws ValidationError naming the path if it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes `data` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

/// Splits on '\n', dropping a trailing '\r' from each line. A final empty
/// line after the last newline is not returned.
std::vector<std::string_view> split_lines(std::string_view text);

/// Seeded generator whose draws are identical on every platform.
/// std::uniform_int_distribution is implementation-defined, so sampling goes
/// through these helpers instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform integer in [0, bound). `bound` must be > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  /// Uniform double in [0, 1) with 53 bits of randomness.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return unit() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace icq
