#include <iostream>
#include <string>
#include <vector>

#include "voxlab/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return voxlab::run_cli(args, std::cout, std::cerr);
}
