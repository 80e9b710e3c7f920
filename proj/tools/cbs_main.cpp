#include <string>
#include <vector>

#include "cbs/cli.hpp"

int main(int argc, char** argv) {
    return cbs::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
