#include <iostream>
#include <string>
#include <vector>

#include "amh/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return amh::run_cli(args, std::cout, std::cerr);
}
