#include <iostream>

#include "wcvs/cli.hpp"

int main(int argc, char** argv) { return wcvs::run_cli(argc, argv, std::cout, std::cerr); }
