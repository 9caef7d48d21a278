#include <iostream>

#include "etcsim_cli/cli.hpp"

int main(int argc, char** argv) { return etcsim::cli::run(argc, argv, std::cout, std::cerr); }
