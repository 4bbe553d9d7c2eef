#include <iostream>
#include <string>
#include <vector>

#include "peerfx/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return peerfx::run_cli(args, std::cout, std::cerr);
}
