#include "pqs/cli.hpp"

int main(int argc, char** argv) { return pqs::cli::run(argc, argv); }
