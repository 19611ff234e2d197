#include <iostream>

#include "probekit/cli/commands.hpp"

int main(int argc, char** argv) { return probekit::cli::run_cli(argc, argv, std::cout, std::cerr); }
