#include "renv/runner.hpp"

int main(int argc, char** argv) { return renv::cli::main_entry(argc, argv); }
