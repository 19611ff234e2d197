#pragma once

#include <iosfwd>

namespace probekit::cli {

// Entry point behind the probekit binary. Returns the process exit code:
// 0 success, 1 internal, 2 config or validation, 3 network or protocol.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace probekit::cli
