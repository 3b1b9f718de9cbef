#include <iostream>

#include "cate/cli.hpp"

int main(int argc, char** argv) { return cate::cli::run(argc, argv, std::cout, std::cerr); }
