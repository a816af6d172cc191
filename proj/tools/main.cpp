#include <iostream>

#include "qchns/cli.hpp"

int main(int argc, char** argv) {
  return qchns::cli_main(argc, argv, std::cout, std::cerr);
}
