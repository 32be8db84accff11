#include <iostream>

#include "cauda/cli.hpp"

int main(int argc, char** argv) { return cauda::cli::run(argc, argv, std::cout, std::cerr); }
