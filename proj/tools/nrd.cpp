#include <iostream>

#include "nrd/cli.hpp"

int main(int argc, char** argv) { return nrd::cli::run(argc, argv, std::cout, std::cerr); }
