#include <iostream>

#include "fletcher/cli.hpp"

int main(int argc, char** argv) {
  return fletcher::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
