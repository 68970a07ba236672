#include <iostream>
#include <string>
#include <vector>

#include "cohortsurv/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cohortsurv::run(args, std::cout, std::cerr);
}
