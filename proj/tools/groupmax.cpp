#include <iostream>

#include "groupmax/cli.hpp"

int main(int argc, char** argv) { return groupmax::run_cli(argc, argv, std::cout, std::cerr); }
