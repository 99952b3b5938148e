#include "guidesim/cli.hpp"

int main(int argc, char** argv) { return guidesim::cli::dispatch(argc, argv); }
