#include <iostream>
#include <string>
#include <vector>

#include "vralpr/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return vralpr::run_cli(args, std::cout, std::cerr);
}
