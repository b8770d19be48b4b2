// Command-line front end, kept in the library so tests can drive it
// in-process with argv vectors and captured streams.
#pragma once

#include <iosfwd>

namespace lwsim {

// Returns the process exit code: 0 on success (including --help), 1 on a
// configuration or usage error, 2 on a runtime failure.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lwsim
