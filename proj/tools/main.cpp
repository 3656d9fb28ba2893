#include "adadecay/cli.hpp"

int main(int argc, char** argv) { return adadecay::cli_main(argc, argv); }
