#include "cli/app.hpp"

int main(int argc, char** argv) { return torus_cycles::cli::run(argc, argv); }
