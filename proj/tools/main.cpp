#include <iostream>

#include "surveymix/cli.hpp"

int main(int argc, char** argv) { return surveymix::run_cli(argc, argv, std::cout, std::cerr); }
