#pragma once

// Batch experiment drivers behind the `gancls` command line tool.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

namespace gancls::cli {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum ExitCode : int {
  kSuccess = 0,
  kRuntimeFailure = 1,
  kConfigurationError = 2,
};

struct Options {
  std::filesystem::path config;
  std::filesystem::path out;
  /// Overrides every seed in the config when present.
  std::optional<std::uint64_t> seed;
};

/// Each command writes its files under opts.out (created if absent) together
/// with manifest.json {subcommand, config_path, output_dir, seed, tool_version,
/// config}, and a summary to `out`.
/// Errors are reported on `err`; the return value is an ExitCode.
int cmd_fixedpoint(const Options& opts, std::ostream& out, std::ostream& err);
int cmd_train(const Options& opts, std::ostream& out, std::ostream& err);
int cmd_compare(const Options& opts, std::ostream& out, std::ostream& err);

}  // namespace gancls::cli
