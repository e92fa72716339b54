#include "lethe/cli.hpp"

int main(int argc, char** argv) { return lethe::run_cli(argc, argv); }
