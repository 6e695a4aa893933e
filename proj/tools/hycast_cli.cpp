#include <iostream>
#include <string>
#include <vector>

#include "hycast/harness.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hycast::run_cli(args, std::cout, std::cerr);
}
