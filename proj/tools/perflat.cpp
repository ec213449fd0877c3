#include <iostream>

#include "perflat/cli.hpp"

int main(int argc, char** argv) { return perflat::cli::run(argc, argv, std::cout, std::cerr); }
