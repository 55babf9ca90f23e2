#include "simflow/cli.hpp"

int main(int argc, char** argv) { return simflow::cli::run(argc, argv); }
