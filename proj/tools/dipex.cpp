#include "dipex/cli.hpp"

#include <iostream>

int main(int argc, char **argv) { return dipex::run_cli(argc, argv, std::cout, std::cerr); }
