#include "transgram/cli.hpp"

int main(int argc, char** argv) { return transgram::cli::main(argc, argv); }
