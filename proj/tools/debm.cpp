#include "debm/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return debm::run_cli(argc, argv, std::cout, std::cerr);
}
