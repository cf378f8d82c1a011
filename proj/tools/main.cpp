#include <iostream>

#include "ucortest/cli.hpp"

int main(int argc, char** argv) {
  return ucortest::cli::run(argc, argv, std::cout, std::cerr);
}
