#include <iostream>

#include "irpf/cli.hpp"

int main(int argc, char** argv) {
  return irpf::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
