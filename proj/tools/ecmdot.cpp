#include <iostream>

#include "ecmdot_cli.hpp"

int main(int argc, char** argv) { return ecmdot::cli::run(argc, argv, std::cout, std::cerr); }
