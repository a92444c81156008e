#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>

namespace dimerlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitSelftestFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitDomain = 3;

/** Environment lookup; injectable so tests do not touch the process environment. */
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

[[nodiscard]] EnvLookup process_environment();

/** Shortest text with 15 significant digits, '.' decimal, independent of the locale. */
[[nodiscard]] std::string format_number(double x);

/**
 * Runs one command. args excludes the program name. Option values are layered
 * config file < DIMERLAB_* environment < command line.
 */
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err, const EnvLookup& env);

}  // namespace dimerlab::cli
