#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return tension_lab::cli::main(argc, argv, std::cout, std::cerr); }
