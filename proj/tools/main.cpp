#include "commands.hpp"

int main(int argc, char** argv) { return fracdiff::cli::run_command(argc, argv); }
