#include "unetsearch/cli.hpp"

int main(int argc, char** argv) { return unetsearch::run_cli(argc, argv); }
