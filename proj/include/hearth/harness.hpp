#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hearth/error.hpp"

namespace hearth::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInput = 3;
inline constexpr int kExitDegraded = 4;

int exit_code_for(Errc code);

// Runs the hearth CLI. `args` excludes the program name. The run directory
// is printed on `out`; failures go to `err` as one JSON object
// {"error": <code>, "message": <text>}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hearth::harness
