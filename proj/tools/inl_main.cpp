#include <iostream>

#include "inl/harness.hpp"

int main(int argc, char** argv) { return inl::run_cli(argc, argv, std::cout, std::cerr); }
