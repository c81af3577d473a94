#include <vector>

#include "etkf/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return etkf::cli::run_cli(args);
}
