#pragma once

#include <iosfwd>

namespace debm {

/// Exit codes: 0 ok, 2 input error, 3 numerical failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace debm
