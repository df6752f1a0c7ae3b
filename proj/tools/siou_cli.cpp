#include "siou/cli.hpp"

int main(int argc, char** argv) { return siou::cli::run(argc, argv); }
