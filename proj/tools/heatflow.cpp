#include <iostream>
#include <string>
#include <vector>

#include "heatflow/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return heatflow::run_cli(args, std::cout, std::cerr);
}
