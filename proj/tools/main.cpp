#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return d2h::cli::run(argc, argv, std::cout, std::cerr); }
