#include "commands.hpp"

int main(int argc, char** argv) { return ddica::cli::run(argc, argv); }
