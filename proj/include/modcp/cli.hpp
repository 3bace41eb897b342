#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace modcp {

// Full command-line front end as a library function: dispatches the
// subcommand, writes one certificate JSON to `out`, diagnostics to `err`.
// Exit codes: 0 success/feasible, 2 stalled, 3 invalid input, 4 a checked
// invariant failed its tolerance.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace modcp
