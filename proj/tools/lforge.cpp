#include <iostream>

#include "lforge/cli/app.hpp"

int main(int argc, char** argv) { return lforge::cli::run(argc, argv, std::cout, std::cerr); }
