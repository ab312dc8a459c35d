#include <iostream>
#include <string>
#include <vector>

#include "mmr/cli_io.hpp"

int main(int argc, char** argv) {
  return mmr::io::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
