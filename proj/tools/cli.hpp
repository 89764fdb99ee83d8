#pragma once

// Command-line front end. Exit codes: 0 success, 1 unexpected failure,
// 2 usage or configuration error, 3 data error, 4 backend unavailable.

#include <ostream>
#include <string>
#include <vector>

#include "protoprompt/error.hpp"

namespace protoprompt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitBackend = 4;

int exit_code_for(ErrorCode code);

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace protoprompt::cli
