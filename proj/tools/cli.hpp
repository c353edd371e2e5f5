#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace splinegen::cli {

/// Runs the splinegen command line. `args` excludes the program name.
/// Returns 0 on success, 1 for invalid input, 2 for unreadable files.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace splinegen::cli
