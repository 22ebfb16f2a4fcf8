#include <iostream>

#include "ppkit/cli.hpp"

int main(int argc, char** argv) { return ppkit::run_cli(argc, argv, std::cout, std::cerr); }
