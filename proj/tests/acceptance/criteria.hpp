#pragma once

// The ten acceptance criteria as self-contained checks, shared by the
// acceptance binary and `gancls selftest`.

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace gancls::acceptance {

struct Outcome {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct Options {
  /// Criteria 8-10 train networks for minutes; skip them when false.
  bool include_training = true;
  /// Scratch space for the training runs' output files.
  std::filesystem::path work_dir;
};

std::vector<Outcome> run_all(const Options& opts, const std::function<void(const Outcome&)>& on_result = {});

/// "PASS [3] title: detail (1.23 s)"
std::string format_line(const Outcome& outcome);

}  // namespace gancls::acceptance
