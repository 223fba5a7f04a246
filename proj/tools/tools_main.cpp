#include "cli.hpp"

int main(int argc, char** argv) { return dai::cli::parse_and_dispatch(argc, argv); }
