#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ctxsearch {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs one `ctxsearch` invocation. `args` excludes the program name.
/// Results go to `out`, logs and help to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string version_string();

}  // namespace ctxsearch
