#include "fash/cli.hpp"

int main(int argc, char** argv) { return fash::cli::run(argc, argv); }
