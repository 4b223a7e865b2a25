#include "dsrf/cli/commands.hpp"

int main(int argc, char** argv) { return dsrf::cli::run(argc, argv); }
