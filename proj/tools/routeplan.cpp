#include <iostream>

#include "routeplan/cli.hpp"

int main(int argc, char** argv) {
  return routeplan::cli::run(argc, argv, std::cout, std::cerr);
}
