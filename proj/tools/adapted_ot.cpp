#include <iostream>
#include <string>
#include <vector>

#include "aot/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return aot::cli::run(std::move(args), std::cout, std::cerr);
}
