#include "sewersim/cli.hpp"

int main(int argc, char** argv) { return sewersim::cli::run_cli(argc, argv); }
