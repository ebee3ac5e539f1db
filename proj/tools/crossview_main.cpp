#include <iostream>

#include "crossview/commands.hpp"

int main(int argc, char** argv) { return crossview::run_cli(argc, argv, std::cout, std::cerr); }
