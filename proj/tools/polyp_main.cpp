#include <string>
#include <vector>

#include "polyp/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return polyp::cli::run(std::move(args));
}
