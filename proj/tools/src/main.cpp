#include <iostream>
#include <string>
#include <vector>

#include "vocalfit/cli/dispatch.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return vocalfit::cli::dispatch(args, std::cout, std::cerr);
}
