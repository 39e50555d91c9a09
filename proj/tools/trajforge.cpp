#include <iostream>

#include "trajforge/cli/cli.hpp"

int main(int argc, char** argv) { return trajforge::cli::run(argc, argv, std::cout, std::cerr); }
