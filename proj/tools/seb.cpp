#include <iostream>

#include "seb/cli.hpp"

int main(int argc, char** argv) { return seb::run_cli(argc, argv, std::cout, std::cerr); }
