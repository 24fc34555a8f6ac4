#include "qndsim_cli/commands.hpp"

int main(int argc, char** argv) {
    return qndsim::cli::run(argc, argv);
}
