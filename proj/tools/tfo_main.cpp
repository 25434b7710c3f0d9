#include <iostream>

#include "tfo/cli.hpp"

int main(int argc, char** argv) {
  return tfo::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
