#include "prunerank/cli.hpp"

int main(int argc, char** argv) { return prunerank::cli_dispatch(argc, argv); }
