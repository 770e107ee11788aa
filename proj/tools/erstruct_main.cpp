#include "commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return erstruct::cli::run(argc, argv, std::cout, std::cerr); }
