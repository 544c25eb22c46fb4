#include "eco/cli.hpp"

int main(int argc, char** argv) { return eco::cli_main(argc, argv); }
