#include "cli.hpp"

int main(int argc, char** argv) { return lexcluster::cli::run(argc, argv); }
