#include "snse/cli.hpp"

int main(int argc, char** argv) { return snse::cli::run(argc, argv); }
