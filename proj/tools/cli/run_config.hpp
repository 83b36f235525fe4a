#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "notamkit/evolve.hpp"
#include "notamkit/gateway.hpp"
#include "notamkit/synthetic.hpp"

namespace notamkit::cli {

namespace fs = std::filesystem;

/// Flat "key = value" run configuration. "include = other.conf" splices
/// another file in place (later keys win); relative paths resolve against
/// the file that names them.
struct RunConfig {
  fs::path source;
  /// Every key as finally resolved (paths absolute), for echoing into run
  /// manifests.
  std::map<std::string, std::string> values;

  std::string task = "notams";  // notams | synthetic
  std::optional<fs::path> dataset;
  std::optional<fs::path> graph;
  std::vector<fs::path> tables;
  std::optional<fs::path> rewrite_rules;
  std::optional<fs::path> status_rules;
  std::optional<fs::path> schema_rules;
  std::optional<fs::path> qcodes;

  std::string backend = "rules";  // rules | grounded | toy | mock | remote
  std::optional<fs::path> mock_script;
  std::optional<fs::path> toy_checkpoint;
  RemoteConfig remote;
  std::size_t timeout_ms = 60000;

  std::size_t views = 5;
  std::size_t concurrency = 1;

  EvolveConfig evolve;
  /// How evolve generates pool responses: "sample" or "argmax".
  std::string evolve_decode = "sample";
  SyntheticTaskOptions synthetic;
  std::optional<double> complexity_scale;
  std::uint64_t seed = 0;
  std::optional<fs::path> out;

  static RunConfig load(const fs::path& path);
  static RunConfig parse(std::string_view text, const fs::path& base_dir, const std::string& source = "<memory>");

  /// Throws InvalidConfig if a referenced path is missing or a value is out
  /// of range.
  void validate() const;
  /// Sorted key=value lines; identical configs give identical text.
  std::string echo() const;
};

}  // namespace notamkit::cli
