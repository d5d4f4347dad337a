#include <iostream>

#include "cliptrap/cli.hpp"

int main(int argc, char** argv) { return cliptrap::cli::run(argc, argv, std::cout, std::cerr); }
