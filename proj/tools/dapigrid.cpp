#include <iostream>

#include "dapigrid/cli.hpp"

int main(int argc, char** argv) { return dapigrid::main_entry(argc, argv, std::cout, std::cerr); }
