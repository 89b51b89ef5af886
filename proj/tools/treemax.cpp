#include "treemax/cli.hpp"

int main(int argc, char** argv) { return treemax::cli_dispatch(argc, argv); }
