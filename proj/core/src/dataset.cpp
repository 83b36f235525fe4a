#include "notamkit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "notamkit/error.hpp"

namespace notamkit {

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  SeededRandom rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    std::swap(p[i - 1], p[std::min(j, i - 1)]);
  }
  return p;
}

Dataset split_dataset(std::vector<TrainingRow> rows, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0))
    throw InvalidConfig("train fraction must be in (0, 1]");
  std::set<std::string> ids;
  for (const auto& r : rows)
    if (!ids.insert(r.input_id).second) throw InvalidConfig("duplicate input id '" + r.input_id + "'");

  const auto perm = seeded_permutation(rows.size(), seed);
  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(rows.size())));
  if (rows.size() >= 2) n_train = std::clamp<std::size_t>(n_train, 1, rows.size() - 1);
  Dataset d;
  for (std::size_t i = 0; i < perm.size(); ++i)
    (i < n_train ? d.train : d.test).push_back(std::move(rows[perm[i]]));
  return d;
}

SeededRandom::SeededRandom(std::uint64_t seed) {
  state_[0] = mix_seed(seed, 0);
  state_[1] = mix_seed(seed, 1);
  if ((state_[0] | state_[1]) == 0) state_[1] = 1;
}

// xorshift128+
std::uint64_t SeededRandom::bits() {
  std::uint64_t s1 = state_[0];
  const std::uint64_t s0 = state_[1];
  state_[0] = s0;
  s1 ^= s1 << 23;
  state_[1] = s1 ^ s0 ^ (s1 >> 17) ^ (s0 >> 26);
  return state_[1] + s0;
}

double SeededRandom::uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

double SeededRandom::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace notamkit
