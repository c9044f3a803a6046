#include "fockdist/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return fockdist::cli::run_scenario(argc, argv, std::cout, std::cerr); }
