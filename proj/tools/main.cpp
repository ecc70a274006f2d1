#include <iostream>

#include "mitral/cli.hpp"

int main(int argc, char** argv) { return mitral::run_cli(argc, argv, std::cout, std::cerr); }
