#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stochcrf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitMissingFile = 2;
inline constexpr int kExitMissingSeeds = 3;
inline constexpr int kExitBadConfig = 4;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace stochcrf::cli
