#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "xtangle/io.hpp"

namespace xtangle::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kCapExceeded = 2, kInconsistency = 3 };

/// args excludes the program name. The JSON report goes to out, structured errors to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Executes a parsed request and returns the full report (request echo, result, timing, version, seed).
io::json execute(const io::JobRequest& request);

const std::vector<std::string>& commands();

}  // namespace xtangle::cli
