#include "hartree/runner.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    for (const auto& a : args)
        if (a == "-h" || a == "--help") {
            std::cout << hartree::usage();
            return 0;
        }
    hartree::RunConfig cfg;
    try {
        cfg = hartree::parse_config(args);
    } catch (const hartree::ConfigError& e) {
        std::cerr << "hartree-lab: " << e.what() << "\n" << hartree::usage();
        return 1;
    }
    return hartree::run(cfg, std::cout);
}
