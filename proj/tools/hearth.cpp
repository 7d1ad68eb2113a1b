#include <iostream>
#include <string>
#include <vector>

#include "hearth/harness.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return hearth::harness::run_cli(args, std::cout, std::cerr);
}
