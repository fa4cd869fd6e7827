#include <iostream>
#include <string>
#include <vector>

#include "wtm/cli.hpp"

int main(int argc, char** argv) {
    return wtm::cli::main(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
