#include "intersub/cli.hpp"

int main(int argc, char** argv) { return intersub::cli::main(argc, argv); }
