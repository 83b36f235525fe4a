#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "notamkit/dataset.hpp"
#include "notamkit/policy.hpp"

namespace notamkit {

struct SyntheticTaskOptions {
  std::size_t rows = 40;
  std::size_t candidates = 4;
  std::size_t dimension = 8;
  /// Minimum gap between the best and second-best hidden score per row.
  double margin = 0.5;
  std::uint64_t seed = 7;
};

/// Features looked up by (input id, candidate); rewritten variants share
/// the id of their source row and therefore its features.
class SyntheticFeaturizer final : public Featurizer {
 public:
  explicit SyntheticFeaturizer(std::size_t dimension) : dimension_(dimension) {}

  std::size_t dimension() const override { return dimension_; }
  std::string schema() const override { return "synthetic/" + std::to_string(dimension_); }
  Vector features(const PolicyInput& input, const std::string& candidate) const override;

  void set(const std::string& input_id, const std::string& candidate, Vector phi);

 private:
  std::size_t dimension_;
  std::map<std::pair<std::string, std::string>, Vector> table_;
};

/// A linearly separable task whose gold output is the argmax of a hidden
/// weight vector. Every row is a small notice (aerodrome closure at a
/// synthetic airport) whose knowledge lists the airport's runways; the
/// candidates are one-record lists naming one runway each.
struct SyntheticTask {
  std::vector<TrainingRow> rows;
  std::shared_ptr<SyntheticFeaturizer> featurizer;
  Vector hidden_weights;
};

SyntheticTask make_synthetic_task(const SyntheticTaskOptions& options = {});

}  // namespace notamkit
