#include <iostream>

#include "lmatch/cli.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return lmatch::run_cli(args, std::cout, std::cerr);
}
