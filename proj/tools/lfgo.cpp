#include "lfgo/cli/commands.hpp"

int main(int argc, char** argv) { return lfgo::cli::run_cli(argc, argv); }
