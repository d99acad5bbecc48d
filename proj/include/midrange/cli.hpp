#pragma once

#include <ostream>

namespace midrange::cli {

/// Runs one subcommand. Returns 0 on success, 1 on a domain error and 2 on a
/// usage error; messages go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace midrange::cli
