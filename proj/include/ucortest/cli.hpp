#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ucortest::cli {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kNotRejected = 0,
  kRejected = 1,
  kUsageError = 2,
};

/// `test` subcommand; args exclude the program and subcommand names.
int cmd_test(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// `simulate` subcommand.
int cmd_simulate(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Dispatches argv[1] to a subcommand.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace ucortest::cli
