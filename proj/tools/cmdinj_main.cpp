#include <iostream>

#include "cmdinj/cli.hpp"

int main(int argc, char** argv) { return cmdinj::run_cli(argc, argv, std::cout, std::cerr); }
