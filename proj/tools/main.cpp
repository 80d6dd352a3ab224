#include <iostream>
#include <string>
#include <vector>

#include "ujack/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ujack::cli::run_main(args, std::cout, std::cerr);
}
