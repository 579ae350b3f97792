#include "drbsgt/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return drbsgt::run_cli(argc, argv, std::cout, std::cerr); }
