#include <iostream>

#include "tdrom/cli.hpp"

int main(int argc, char** argv) { return tdrom::run_cli(argc, argv, std::cout, std::cerr); }
