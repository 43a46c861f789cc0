#include <iostream>

#include "kirett/cli.hpp"

int main(int argc, char** argv) { return kirett::run_cli(argc, argv, std::cin, std::cout, std::cerr); }
