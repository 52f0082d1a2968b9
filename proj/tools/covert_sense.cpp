#include <iostream>

#include "covert/cli.hpp"

int main(int argc, char** argv) {
  return covert::cli::main_entry(argc, argv, std::cout, std::cerr);
}
