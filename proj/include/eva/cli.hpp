#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace eva {

/// Command-line entry point: gen-data, train, eval, gradcheck, ablate.
/// Returns 0 on success, 1 on a runtime failure (reported with the failing
/// component's name) and 2 on a usage error.
int cli(int argc, const char* const* argv);
/// Same, with arguments excluding the program name and explicit streams.
int cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace eva
