#include <iostream>

#include "etpir/cli.hpp"

int main(int argc, char** argv) { return etpir::cli_main(argc, argv, std::cout, std::cerr); }
