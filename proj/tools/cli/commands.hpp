#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pathlet::cli {

/// Runs `pathlet <args...>` (args excludes the program name).
/// Returns 0 on success, 2 on usage or validation errors, 1 on runtime failures.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "HH:MM", "HH:MM:SS" or plain seconds, as seconds of day.
double parse_time_of_day(const std::string& text);

}  // namespace pathlet::cli
