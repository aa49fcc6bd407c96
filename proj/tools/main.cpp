#include <vector>
#include <string>

#include "rectseg/cli.hpp"

int main(int argc, char** argv) {
    return rectseg::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
