#include "cocoon/driver/cli.hpp"

#include <iostream>

int main(int argc, char **argv) {
  return cocoon::driver::runCli(argc, argv, std::cout, std::cerr);
}
