#include "dsattn/cli_commands.hpp"

int main(int argc, char** argv) { return dsattn::cli::main_entry(argc, argv); }
