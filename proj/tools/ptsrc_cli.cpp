#include "ptsrc/cli.hpp"

int main(int argc, char** argv) {
    return ptsrc::run_cli(argc, argv);
}
