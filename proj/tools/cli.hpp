#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kgx::cli {

enum ExitCode { kOk = 0, kUsage = 1, kDataError = 2, kInternal = 3 };

// Runs `kgx <subcommand> ...`; argv[0] is the program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Makes a running `serve` shut down; safe to call from a signal handler.
void request_stop();

}  // namespace kgx::cli
