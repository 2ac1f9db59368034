#include "segfair/cli.hpp"

int main(int argc, char** argv) { return segfair::run_cli(argc, argv); }
