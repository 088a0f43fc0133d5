#include <iostream>

#include "msk/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return msk::cli::run(args, std::cout, std::cerr);
}
