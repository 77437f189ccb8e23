#include <iostream>

#include "voicerisk/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return voicerisk::run_cli(args, std::cout, std::cerr);
}
