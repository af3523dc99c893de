#include <iostream>

#include "shillsim/cli.hpp"

int main(int argc, char** argv) { return shillsim::run_cli(argc, argv, std::cout, std::cerr); }
