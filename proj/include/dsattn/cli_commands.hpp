#pragma once

#include <string>

namespace dsattn::cli {

// Full command-line entry point (subcommands: train, sweep, cost, dataflow,
// oracle-sparsity). Exit codes: 0 success, 2 config error, 3 numerical
// divergence, 4 I/O error.
int main_entry(int argc, char** argv);

// Dispatch one command on a config document (JSON text); used by tests.
int run_command(const std::string& command, const std::string& config_json,
                const std::string& out_dir);

}  // namespace dsattn::cli
