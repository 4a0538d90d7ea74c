#include <iostream>

#include "seq2bf/app/cli.hpp"

int main(int argc, char** argv) { return seq2bf::app::run_cli(argc, argv, std::cin, std::cout, std::cerr); }
