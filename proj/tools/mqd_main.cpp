#include <mqd/cli.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    return mqd::cli::run_cli(argc, argv, std::cout, std::cerr);
}
