#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "notamkit/notam.hpp"
#include "notamkit/policy.hpp"
#include "notamkit/retrieval.hpp"

namespace notamkit {

/// One labelled example: the policy input (notice text, knowledge lines,
/// candidates) and the gold record list in canonical form.
struct TrainingRow {
  std::string input_id;
  PolicyInput input;
  std::string gold;
  std::optional<Notam> notam;
  KnowledgeBundle knowledge;
};

struct Dataset {
  std::vector<TrainingRow> train;
  std::vector<TrainingRow> test;
};

/// Seeded shuffle then split; both sides are non-empty when there are at
/// least two rows. Throws InvalidConfig on duplicate input ids or a
/// fraction outside (0, 1].
Dataset split_dataset(std::vector<TrainingRow> rows, double train_fraction = 0.8, std::uint64_t seed = 0);

/// Fisher-Yates with an explicit 64-bit generator, so the permutation is the
/// same on every standard library.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

/// Uniform and Box-Muller normal draws from xorshift128+, identical on every
/// platform (the standard distributions are implementation-defined).
class SeededRandom {
 public:
  explicit SeededRandom(std::uint64_t seed);
  double normal();
  double uniform();

 private:
  std::uint64_t state_[2];
  std::optional<double> spare_;
  std::uint64_t bits();
};

}  // namespace notamkit
