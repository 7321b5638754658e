#include "sdfields/cli.hpp"

int main(int argc, char** argv) { return sdfields::cli::run(argc, argv); }
