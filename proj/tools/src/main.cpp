#include "redslds_cli/cli.hpp"

int main(int argc, char** argv) { return redslds::cli::run(argc, argv); }
