#include <iostream>
#include <string>
#include <vector>

#include "atig/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return atig::run_cli(args, std::cout, std::cerr);
}
