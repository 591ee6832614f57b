#include <iostream>

#include "seqbias/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return seqbias::cli::run(args, std::cout, std::cerr);
}
