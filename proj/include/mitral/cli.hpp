#pragma once

#include <ostream>

namespace mitral {

/// Exit codes: 0 success, 1 error, 2 nothing to do (every image rejected).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mitral
