#include <iostream>

#include "ptheta_cli.hpp"

int main(int argc, char** argv) { return ptheta::cli::main_entry(argc, argv, std::cout, std::cerr); }
