#pragma once

#include <iosfwd>

namespace mcbrl::cli {

inline constexpr int kSuccess = 0;
inline constexpr int kConfigError = 1;
inline constexpr int kRuntimeError = 2;

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace mcbrl::cli
