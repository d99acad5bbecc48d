#include <iostream>

#include "midrange/cli.hpp"

int main(int argc, char** argv) { return midrange::cli::run(argc, argv, std::cout, std::cerr); }
