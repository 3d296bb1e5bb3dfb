#include <iostream>

#include "renewal/cli.hpp"

int main(int argc, char** argv) { return renewal::cli::run(argc, argv, std::cout, std::cerr); }
