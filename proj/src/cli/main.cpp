#include "smoothquad/cli.hpp"

int main(int argc, char** argv) { return smoothquad::cli::main_entry(argc, argv); }
