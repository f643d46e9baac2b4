#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace spherekit::cli {

enum ExitCode : int { kPass = 0, kVerdictFailure = 1, kUsageError = 2 };

/// `spherekit <noun> <verb> [flags]`, without the program name. Tokens of the
/// form key=value are read as --key=value.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Seed of pipeline step `index`: every step draws from its own stream.
std::uint64_t step_seed(std::uint64_t seed, std::size_t index);

/// Whitespace split with double-quoted groups kept together.
std::vector<std::string> tokenize(const std::string& command);

}  // namespace spherekit::cli
