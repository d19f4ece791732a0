#include <iostream>

#include "wconv/cli.hpp"

int main(int argc, char** argv) { return wconv::run_cli(argc, argv, std::cout, std::cerr); }
