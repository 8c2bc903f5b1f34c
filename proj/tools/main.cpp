#include "gsde/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return gsde::run_cli(argc, argv, std::cout, std::cerr); }
