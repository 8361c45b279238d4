#include "lfo/cli/cli.hpp"

int main(int argc, char** argv) { return lfo::run_cli(argc, argv); }
