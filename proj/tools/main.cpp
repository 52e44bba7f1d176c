#include <iostream>

#include "nexcp/cli.hpp"

int main(int argc, char** argv) { return nexcp::run_cli(argc, argv, std::cout, std::cerr); }
