#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace stability_index {

/// Parses `args` (without the program name) and runs the selected
/// subcommand. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stability_index
