#include "ixbandit/cli.hpp"

int main(int argc, char** argv) { return ixbandit::cli_main(argc, argv); }
