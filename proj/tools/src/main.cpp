#include <iostream>
#include <string>
#include <vector>

#include "gcdro/cli/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return gcdro::cli::run_command(args, std::cout, std::cerr);
}
