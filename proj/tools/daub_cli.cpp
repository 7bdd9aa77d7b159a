#include "daub/cli.hpp"

int main(int argc, char** argv) { return daub::cli::main(argc, argv); }
