#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "notamkit/notam.hpp"
#include "notamkit/policy.hpp"
#include "notamkit/record.hpp"
#include "notamkit/retrieval.hpp"
#include "notamkit/rules.hpp"
#include "notamkit/schema.hpp"

namespace notamkit {

inline constexpr std::string_view kRunwayStatusTemplate = "runway-status";

struct GeneratorRequest {
  std::string template_id{kRunwayStatusTemplate};
  Notam notam;
  KnowledgeBundle knowledge;
  DecodeMode decode = DecodeMode::argmax();
  std::chrono::milliseconds timeout{60000};
  /// Identify the call for scripted backends.
  std::string input_id;
  std::size_t variant_index = 0;
};

struct GeneratorResponse {
  std::string raw_text;
  RecordList records;
  std::chrono::microseconds latency{0};
  std::string provider;
};

std::vector<std::string> prompt_template_ids();

/// Instruction block, then one "[K] " line per knowledge line (or a single
/// "(no retrieved knowledge)" line), then the notice. Throws UnknownTemplate.
std::string render_prompt(std::string_view template_id, const Notam& notam, const KnowledgeBundle& knowledge);

/// The last well-formed record list in a reply: the balanced JSON array
/// (or, failing that, object) ending furthest into the text that parses as
/// records. Throws ExtractionFailed when there is none.
RecordList extract_record_block(std::string_view reply);

/// A generator. Implementations are safe to call concurrently.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  /// Throws a GatewayError subclass on failure.
  virtual GeneratorResponse generate(const GeneratorRequest& request) const = 0;
};

/// Keyword rule baseline; ignores the knowledge bundle.
class RuleBackend final : public Backend {
 public:
  explicit RuleBackend(RuleSet rules = RuleSet::builtin()) : rules_(std::move(rules)) {}
  std::string id() const override { return "rules"; }
  GeneratorResponse generate(const GeneratorRequest& request) const override;

 private:
  RuleSet rules_;
};

/// Rule baseline plus schema inference over the retrieved facts: an
/// aerodrome-wide closure propagates along HAS_RUNWAY to every runway the
/// knowledge lists, replacing the runway-less record with one per runway.
class GroundedRuleBackend final : public Backend {
 public:
  explicit GroundedRuleBackend(RuleSet rules = RuleSet::builtin(),
                               SchemaRuleSet schema = SchemaRuleSet::builtin())
      : rules_(std::move(rules)), schema_(std::move(schema)) {}
  std::string id() const override { return "grounded-rules"; }
  GeneratorResponse generate(const GeneratorRequest& request) const override;

 private:
  RuleSet rules_;
  SchemaRuleSet schema_;
};

/// Decodes with a log-linear policy over enumerate_notam_candidates.
class ToyBackend final : public Backend {
 public:
  explicit ToyBackend(LogLinearPolicy policy, std::size_t candidate_cap = 32)
      : policy_(std::move(policy)), cap_(candidate_cap) {}
  std::string id() const override { return "toy"; }
  GeneratorResponse generate(const GeneratorRequest& request) const override;

 private:
  LogLinearPolicy policy_;
  std::size_t cap_;
};

/// Replays a script. Each JSONL line has "input_id", optional "variant"
/// (integer) and "knowledge" (boolean: whether the request carries any
/// retrieved knowledge), and exactly one of "output" (record array),
/// "reply" (raw text, run through extraction) or "error" ("timeout",
/// "extraction", or "remote:<status>"). The most specific matching line
/// wins; unmatched requests fail with GatewayError.
class MockBackend final : public Backend {
 public:
  struct Entry {
    std::string input_id;
    std::optional<std::size_t> variant;
    std::optional<bool> knowledge;
    std::optional<std::string> output;  // canonical record list
    std::optional<std::string> reply;
    std::optional<std::string> error;
  };

  MockBackend() = default;
  explicit MockBackend(std::vector<Entry> entries);
  static MockBackend parse(std::string_view jsonl, const std::string& source = "<memory>");
  static MockBackend load(const std::filesystem::path& path);

  std::string id() const override { return "mock"; }
  GeneratorResponse generate(const GeneratorRequest& request) const override;
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::vector<Entry> entries_;
};

struct RemoteConfig {
  /// "http://host:port"; the request goes to <base_url>/v1/chat/completions.
  std::string base_url;
  std::string model;
  /// Environment variable holding the bearer token; unset means no header.
  std::string api_key_env = "NOTAMKIT_API_KEY";
  std::size_t max_in_flight = 4;
  std::string path = "/v1/chat/completions";
};

/// Chat-completion client. The request body is
///   {"model": M, "messages": [{"role": "user", "content": PROMPT}],
///    "temperature": 0 | 1, "seed": S (sampling only)}
/// and the reply text is choices[0].message.content.
class RemoteBackend final : public Backend {
 public:
  explicit RemoteBackend(RemoteConfig config);
  ~RemoteBackend() override;
  std::string id() const override { return "remote:" + config_.model; }
  GeneratorResponse generate(const GeneratorRequest& request) const override;

 private:
  struct Limiter;
  RemoteConfig config_;
  std::unique_ptr<Limiter> limiter_;
};

}  // namespace notamkit
