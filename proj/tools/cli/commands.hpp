#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "notamkit/error.hpp"

namespace notamkit::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kInputError = 1, kDegraded = 2, kInternal = 3 };

/// Bad input that is not a library error: unreadable files, a run directory
/// without a manifest, notices that fail to parse.
class InputError : public Error {
 public:
  using Error::Error;
};

class MissingManifest : public InputError {
 public:
  explicit MissingManifest(const fs::path& dir) : InputError("no manifest.json in " + dir.string()) {}
};

struct GlobalOptions {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> out;
  bool no_kg = false;
  bool no_multiview = false;
  bool fresh = false;
  /// Stop evolve after this many completed iterations, leaving the run
  /// resumable (simulates an interrupted run).
  std::optional<int> stop_after;
};

int cmd_parse(const GlobalOptions& opts, const fs::path& input, std::ostream& out, std::ostream& err);
int cmd_retrieve(const GlobalOptions& opts, const fs::path& input, std::ostream& out, std::ostream& err);
int cmd_baseline(const GlobalOptions& opts, const fs::path& input, std::ostream& out, std::ostream& err);
int cmd_infer(const GlobalOptions& opts, const fs::path& input, std::ostream& out, std::ostream& err);
int cmd_evolve(const GlobalOptions& opts, std::ostream& out, std::ostream& err);
int cmd_report(const GlobalOptions& opts, const std::vector<fs::path>& runs, std::ostream& out,
               std::ostream& err);

/// Argument parsing and dispatch; maps exceptions to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Writes to a sibling temp file and renames it over the target.
void write_atomic(const fs::path& path, const std::string& text);

}  // namespace notamkit::cli
