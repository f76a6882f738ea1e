#include <iostream>

#include "dimo/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dimo::run_cli(args, std::cout, std::cerr);
}
