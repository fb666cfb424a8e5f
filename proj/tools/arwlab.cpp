#include <iostream>

#include "arwlab/expcli.hpp"

int main(int argc, char** argv) { return arwlab::exp::cli_main(argc, argv, std::cout, std::cerr); }
