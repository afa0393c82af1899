#include <iostream>

#include "mgl/cli.hpp"

int main(int argc, char** argv) { return mgl::run_cli(argc, argv, std::cout, std::cerr); }
