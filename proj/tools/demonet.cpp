#include <exception>
#include <iostream>

#include "demonet/cli.hpp"

int main(int argc, char** argv) {
    try {
        return demonet::cli::run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
