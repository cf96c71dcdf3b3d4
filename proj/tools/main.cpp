#include "cli.hpp"

int main(int argc, char** argv) { return compbias::cli_main(argc, argv); }
