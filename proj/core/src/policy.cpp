#include "notamkit/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "notamkit/error.hpp"
#include "text_util.hpp"

namespace notamkit {

namespace {
constexpr std::string_view kCheckpointMagic = "notamkit-policy";
constexpr int kCheckpointVersion = 1;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}
}  // namespace

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double logsumexp(std::span<const double> xs) {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

LogLinearPolicy::LogLinearPolicy(std::shared_ptr<const Featurizer> featurizer,
                                 std::shared_ptr<const CandidateEnumerator> enumerator)
    : featurizer_(std::move(featurizer)),
      enumerator_(enumerator ? std::move(enumerator) : std::make_shared<ListedCandidates>()),
      theta_(featurizer_->dimension(), 0.0) {}

LogLinearPolicy LogLinearPolicy::with_parameters(Vector theta) const {
  if (theta.size() != theta_.size()) throw Error("parameter vector has wrong length");
  LogLinearPolicy p = *this;
  p.theta_ = std::move(theta);
  return p;
}

std::vector<std::string> LogLinearPolicy::candidates(const PolicyInput& input) const {
  auto c = enumerator_->candidates(input);
  if (c.empty()) throw Error("input '" + input.id + "' has no candidates");
  std::set<std::string_view> seen;
  for (const auto& s : c)
    if (!seen.insert(s).second) throw Error("input '" + input.id + "' has duplicate candidates");
  return c;
}

LogLinearPolicy::Scored LogLinearPolicy::score_all(const PolicyInput& input) const {
  Scored s;
  s.candidates = candidates(input);
  s.features.reserve(s.candidates.size());
  s.scores.reserve(s.candidates.size());
  for (const auto& c : s.candidates) {
    auto phi = featurizer_->features(input, c);
    if (phi.size() != theta_.size()) throw Error("featurizer returned wrong dimension");
    double dot = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) dot += theta_[i] * phi[i];
    s.features.push_back(std::move(phi));
    s.scores.push_back(dot);
  }
  return s;
}

double LogLinearPolicy::score(const PolicyInput& input, const std::string& candidate) const {
  const auto phi = featurizer_->features(input, candidate);
  double dot = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) dot += theta_[i] * phi[i];
  return dot;
}

std::vector<double> LogLinearPolicy::distribution(const PolicyInput& input) const {
  const auto s = score_all(input);
  const double z = logsumexp(s.scores);
  std::vector<double> p(s.scores.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(s.scores[i] - z);
  return p;
}

double LogLinearPolicy::log_prob(const PolicyInput& input, const std::string& candidate) const {
  const auto s = score_all(input);
  const auto it = std::find(s.candidates.begin(), s.candidates.end(), candidate);
  if (it == s.candidates.end()) throw UnknownCandidate("candidate not enumerated for input '" + input.id + "'");
  return s.scores[static_cast<std::size_t>(it - s.candidates.begin())] - logsumexp(s.scores);
}

Vector LogLinearPolicy::grad_log_prob(const PolicyInput& input, const std::string& candidate) const {
  const auto s = score_all(input);
  const auto it = std::find(s.candidates.begin(), s.candidates.end(), candidate);
  if (it == s.candidates.end()) throw UnknownCandidate("candidate not enumerated for input '" + input.id + "'");
  const double z = logsumexp(s.scores);
  Vector g = s.features[static_cast<std::size_t>(it - s.candidates.begin())];
  for (std::size_t k = 0; k < s.candidates.size(); ++k) {
    const double p = std::exp(s.scores[k] - z);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= p * s.features[k][i];
  }
  return g;
}

std::string LogLinearPolicy::generate(const PolicyInput& input, DecodeMode mode) const {
  const auto s = score_all(input);
  if (mode.kind == DecodeMode::Kind::Argmax) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < s.candidates.size(); ++k) {
      if (s.scores[k] > s.scores[best] ||
          (s.scores[k] == s.scores[best] && s.candidates[k] < s.candidates[best]))
        best = k;
    }
    return s.candidates[best];
  }
  // Inverse CDF with a 53-bit uniform so draws are identical across
  // standard library implementations.
  std::mt19937_64 rng(mode.seed);
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  const double z = logsumexp(s.scores);
  double acc = 0.0;
  for (std::size_t k = 0; k < s.candidates.size(); ++k) {
    acc += std::exp(s.scores[k] - z);
    if (u < acc) return s.candidates[k];
  }
  return s.candidates.back();
}

LogLinearPolicy LogLinearPolicy::apply_update(std::span<const double> gradient, double learning_rate) const {
  if (gradient.size() != theta_.size()) throw Error("gradient has wrong length");
  for (double g : gradient)
    if (!std::isfinite(g)) throw NonFiniteGradient();
  Vector next = theta_;
  for (std::size_t i = 0; i < next.size(); ++i) next[i] -= learning_rate * gradient[i];
  LogLinearPolicy p = *this;
  p.theta_ = std::move(next);
  return p;
}

std::string LogLinearPolicy::checkpoint() const {
  std::string out;
  out += std::string(kCheckpointMagic) + " " + std::to_string(kCheckpointVersion) + "\n";
  out += "schema " + hex64(fnv1a(featurizer_->schema())) + "\n";
  out += "dim " + std::to_string(theta_.size()) + "\n";
  char buf[40];
  for (double v : theta_) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    out += buf;
  }
  return out;
}

LogLinearPolicy LogLinearPolicy::restore(std::string_view text) const {
  const auto lines = detail::split_lines(text);
  if (lines.size() < 3) throw Error("truncated policy checkpoint");
  const auto head = detail::split_words(lines[0]);
  if (head.size() != 2 || head[0] != kCheckpointMagic) throw Error("not a policy checkpoint");
  if (std::stoi(head[1]) != kCheckpointVersion) throw Error("unsupported checkpoint version " + head[1]);
  const auto schema = detail::split_words(lines[1]);
  const std::string expected = hex64(fnv1a(featurizer_->schema()));
  if (schema.size() != 2 || schema[0] != "schema" || schema[1] != expected)
    throw SchemaMismatch("checkpoint feature schema differs from the featurizer's (" + expected + ")");
  const auto dim = detail::split_words(lines[2]);
  if (dim.size() != 2 || dim[0] != "dim") throw Error("checkpoint missing dimension");
  const std::size_t d = std::stoul(dim[1]);
  if (d != theta_.size() || lines.size() != 3 + d) throw SchemaMismatch("checkpoint dimension mismatch");
  Vector theta(d);
  for (std::size_t i = 0; i < d; ++i) theta[i] = std::stod(lines[3 + i]);
  return with_parameters(std::move(theta));
}

}  // namespace notamkit
