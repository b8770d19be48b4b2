#include <iostream>

#include "lwsim/cli.hpp"

int main(int argc, char** argv) {
  return lwsim::cli_main(argc, argv, std::cout, std::cerr);
}
