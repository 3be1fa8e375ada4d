#include "icq/cli.hpp"

int main(int argc, char** argv) { return icq::run_cli(argc, argv); }
