#include <iostream>
#include <string>
#include <vector>

#include "rlguard/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return rlguard::run_cli(args, std::cout, std::cerr);
}
