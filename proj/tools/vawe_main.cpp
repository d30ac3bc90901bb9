#include "vawe/cli.hpp"

int main(int argc, char** argv) { return vawe::run_cli(argc, argv); }
