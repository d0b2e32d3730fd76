#include "lppi/cli.hpp"

int main(int argc, char** argv) { return lppi::run_cli(argc, argv); }
