#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return malfam::cli::run(argc, argv, std::cout, std::cerr); }
