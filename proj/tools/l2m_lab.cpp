#include "l2m/cli/runner.hpp"

int main(int argc, char** argv) { return l2m::cli::run_cli(argc, argv); }
