#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace repgap::cli {

/// Runs the command line tool on `args` (without the program name) and
/// returns the process exit code: 0 on success, 2 usage, 3 I/O,
/// 4 validation, 5 numerical.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace repgap::cli
