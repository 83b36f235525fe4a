#include "notamkit/gateway.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <set>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "notamkit/error.hpp"
#include "notamkit/notam_policy.hpp"
#include "text_util.hpp"

namespace notamkit {

using nlohmann::json;

namespace {

constexpr std::string_view kRunwayStatusInstructions =
    R"(As an AI assistant specialized in parsing NOTAMs, extract runway status information according to the following structured rules.

Scope: Focus only on runway closure, restriction, or reopening messages.
Ignore taxiway, apron, or lighting-related NOTAMs.

Runway Status Classification:
- Closed (MRLC, MRXX): Keywords include CLOSED, CLSD, CLOSURE, NOT AVBL, UNAVAILABLE, SUSPENDED, etc.
- Limited / Restricted (MRLT, MRXX): Keywords include RESTRICTED, LIMITED, RESERVED FOR, often combined with "only".
- Open / Cancellation (MRAH): Keywords include OPEN, OPN TO TFC, CANCELLED CLOSURE, etc.

Impact Evaluation:
- Determine whether the restriction affects takeoffs, landings, or both.
  If unspecified, assume both.
- Identify affected flight types:
  - If not mentioned: assign "International, Domestic, Regional".
  - If explicitly mentioned (e.g., "INTERNATIONAL FLIGHT ONLY"): assign accordingly.
- Identify affected aircraft types:
  - If wingspan, CODE (e.g., C/D), or engine number is mentioned, fill in affect_actype.
  - Convert wingspan from FT to M if required.

Output Format:
- airport: ICAO code
- runway: Runway number
- affect_actype: Affected aircraft type or null
- affect_region: TAKEOFFS | LANDINGS | TAKEOFFS,LANDINGS
- flight_type: International | Domestic | Regional (use Chinese wording if applicable)

Notes:
- Partial closure/restriction = full closure/restriction.
- Create separate records for each runway mentioned.
- Extract only explicitly stated information; avoid assumptions.
- Preserve Chinese wording for flight types when present.
- Match CODE or category restrictions with aircraft type table if needed.
)";

constexpr std::string_view kRunwayStatusClosing =
    "Now, based on the above rules, extract relevant information from the given NOTAM text and output in JSON format.\n";

// End of the balanced bracket span starting at `open`, honouring JSON strings.
std::optional<std::size_t> matching_close(std::string_view s, std::size_t open) {
  const char o = s[open];
  const char c = o == '[' ? ']' : '}';
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char ch = s[i];
    if (in_string) {
      if (ch == '\\') ++i;
      else if (ch == '"') in_string = false;
      continue;
    }
    if (ch == '"') in_string = true;
    else if (ch == o) ++depth;
    else if (ch == c && --depth == 0) return i;
  }
  return std::nullopt;
}

std::optional<RecordList> last_block(std::string_view reply, char open) {
  std::optional<RecordList> best;
  std::size_t best_end = 0;
  for (std::size_t i = 0; i < reply.size(); ++i) {
    if (reply[i] != open) continue;
    const auto end = matching_close(reply, i);
    if (!end || (best && *end <= best_end)) continue;
    try {
      auto recs = parse_record_list(reply.substr(i, *end - i + 1));
      best = std::move(recs);
      best_end = *end;
    } catch (const InvalidRecord&) {
    }
  }
  return best;
}

GeneratorResponse respond(std::string provider, RecordList records,
                          std::chrono::steady_clock::time_point started, std::string raw = {}) {
  GeneratorResponse r;
  r.records = canonicalize(std::move(records));
  r.raw_text = raw.empty() ? canonical_serialize(r.records) : std::move(raw);
  r.provider = std::move(provider);
  r.latency = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - started);
  return r;
}

}  // namespace

std::vector<std::string> prompt_template_ids() { return {std::string(kRunwayStatusTemplate)}; }

std::string render_prompt(std::string_view template_id, const Notam& notam, const KnowledgeBundle& knowledge) {
  if (template_id != kRunwayStatusTemplate) throw UnknownTemplate(std::string(template_id));
  std::string out(kRunwayStatusInstructions);
  out += "\nRetrieved knowledge:\n";
  const auto lines = knowledge.lines();
  if (lines.empty()) out += "(no retrieved knowledge)\n";
  for (const auto& l : lines) out += "[K] " + l + "\n";
  out += "\nNOTAM:\n";
  out += notam.raw_text.empty() ? serialize_notam(notam) : notam.raw_text;
  if (out.back() != '\n') out += '\n';
  out += '\n';
  out += kRunwayStatusClosing;
  return out;
}

RecordList extract_record_block(std::string_view reply) {
  if (auto r = last_block(reply, '[')) return std::move(*r);
  if (auto r = last_block(reply, '{')) return std::move(*r);
  throw ExtractionFailed();
}

GeneratorResponse RuleBackend::generate(const GeneratorRequest& request) const {
  const auto started = std::chrono::steady_clock::now();
  return respond(id(), extract_records(request.notam, rules_), started);
}

GeneratorResponse GroundedRuleBackend::generate(const GeneratorRequest& request) const {
  const auto started = std::chrono::steady_clock::now();
  RecordList records = extract_records(request.notam, rules_);
  const auto wide = std::find_if(records.begin(), records.end(), [](const auto& r) { return r.runway.empty(); });
  if (wide == records.end() || request.knowledge.graph_facts.empty()) return respond(id(), std::move(records), started);

  // The retrieved facts as a graph, so propagation rules can follow them.
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  std::set<std::string> ids;
  for (const auto& f : request.knowledge.graph_facts) {
    for (const auto* name : {&f.subject, &f.object})
      if (ids.insert(*name).second) nodes.push_back({*name, "Entity", {}, f.provenance});
    edges.push_back({f.subject, f.relation, f.object, f.provenance});
  }
  const auto graph = KnowledgeGraph::build(std::move(nodes), std::move(edges));
  const auto derived = infer_schema_facts(extract_notice_facts(request.notam, rules_), schema_, &graph);

  RecordList grounded;
  for (const auto& d : derived) {
    if (d.attribute != "status" || d.value != "Closed") continue;
    StructuredRecord r = *wide;
    r.runway = d.subject;
    try {
      validate(r);
    } catch (const InvalidRecord&) {
      continue;  // propagated to something that is not a runway
    }
    grounded.push_back(std::move(r));
  }
  if (grounded.empty()) return respond(id(), std::move(records), started);
  records.erase(wide);
  for (auto& r : grounded) records.push_back(std::move(r));
  return respond(id(), std::move(records), started);
}

GeneratorResponse ToyBackend::generate(const GeneratorRequest& request) const {
  const auto started = std::chrono::steady_clock::now();
  auto cands = enumerate_notam_candidates(request.notam, request.knowledge, std::nullopt, cap_);
  const auto input = make_notam_input(request.notam, request.knowledge, std::move(cands),
                                      request.input_id.empty() ? request.notam.id : request.input_id);
  const std::string out = policy_.generate(input, request.decode);
  return respond(id(), parse_record_list(out), started, out);
}

MockBackend::MockBackend(std::vector<Entry> entries) : entries_(std::move(entries)) {}

MockBackend MockBackend::parse(std::string_view jsonl, const std::string& source) {
  std::vector<Entry> entries;
  std::size_t line_no = 0;
  for (const auto& line : detail::split_lines(jsonl)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    try {
      const json j = json::parse(t);
      Entry e;
      e.input_id = j.at("input_id").get<std::string>();
      if (j.contains("variant") && !j["variant"].is_null()) e.variant = j["variant"].get<std::size_t>();
      if (j.contains("knowledge") && !j["knowledge"].is_null()) e.knowledge = j["knowledge"].get<bool>();
      int kinds = 0;
      if (j.contains("output")) {
        e.output = canonical_serialize(parse_record_list(j["output"].dump()));
        ++kinds;
      }
      if (j.contains("reply")) {
        e.reply = j["reply"].get<std::string>();
        ++kinds;
      }
      if (j.contains("error")) {
        e.error = j["error"].get<std::string>();
        const auto& err = *e.error;
        if (err != "timeout" && err != "extraction" && err.rfind("remote:", 0) != 0)
          throw Error("unknown scripted error '" + err + "'");
        ++kinds;
      }
      if (kinds != 1) throw Error("exactly one of output, reply, error is required");
      entries.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw FormatError(source, line_no, ex.what());
    } catch (const FormatError&) {
      throw;
    } catch (const Error& ex) {
      throw FormatError(source, line_no, ex.what());
    }
  }
  return MockBackend(std::move(entries));
}

MockBackend MockBackend::load(const std::filesystem::path& path) {
  return parse(detail::read_file(path), path.string());
}

GeneratorResponse MockBackend::generate(const GeneratorRequest& request) const {
  const auto started = std::chrono::steady_clock::now();
  const bool has_knowledge = !request.knowledge.empty();
  const std::string& key = request.input_id.empty() ? request.notam.id : request.input_id;
  const Entry* best = nullptr;
  int best_rank = -1;
  for (const auto& e : entries_) {
    if (e.input_id != key) continue;
    if (e.variant && *e.variant != request.variant_index) continue;
    if (e.knowledge && *e.knowledge != has_knowledge) continue;
    const int rank = (e.variant ? 2 : 0) + (e.knowledge ? 1 : 0);
    if (rank > best_rank) {
      best = &e;
      best_rank = rank;
    }
  }
  if (!best) throw GatewayError("no scripted reply for '" + key + "' view " + std::to_string(request.variant_index));
  if (best->error) {
    const auto& err = *best->error;
    if (err == "timeout") throw Timeout();
    if (err == "extraction") throw ExtractionFailed();
    throw RemoteError(std::atoi(err.c_str() + 7), "scripted failure");
  }
  if (best->reply) return respond(id(), extract_record_block(*best->reply), started, *best->reply);
  return respond(id(), parse_record_list(*best->output), started);
}

struct RemoteBackend::Limiter {
  std::mutex mu;
  std::condition_variable cv;
  std::size_t in_flight = 0;
  std::size_t limit = 1;
};

RemoteBackend::RemoteBackend(RemoteConfig config)
    : config_(std::move(config)), limiter_(std::make_unique<Limiter>()) {
  if (config_.base_url.empty()) throw InvalidConfig("remote backend needs a base URL");
  if (config_.model.empty()) throw InvalidConfig("remote backend needs a model name");
  if (config_.max_in_flight == 0) throw InvalidConfig("remote request limit must be >= 1");
  limiter_->limit = config_.max_in_flight;
}

RemoteBackend::~RemoteBackend() = default;

GeneratorResponse RemoteBackend::generate(const GeneratorRequest& request) const {
  {
    std::unique_lock lock(limiter_->mu);
    limiter_->cv.wait(lock, [&] { return limiter_->in_flight < limiter_->limit; });
    ++limiter_->in_flight;
  }
  struct Release {
    Limiter& l;
    ~Release() {
      {
        std::lock_guard lock(l.mu);
        --l.in_flight;
      }
      l.cv.notify_one();
    }
  } release{*limiter_};

  const auto started = std::chrono::steady_clock::now();
  json body;
  body["model"] = config_.model;
  body["messages"] = json::array({{{"role", "user"},
                                   {"content", render_prompt(request.template_id, request.notam, request.knowledge)}}});
  if (request.decode.kind == DecodeMode::Kind::Sample) {
    body["temperature"] = 1.0;
    body["seed"] = request.decode.seed;
  } else {
    body["temperature"] = 0.0;
  }

  httplib::Client client(config_.base_url);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
    headers.emplace("Authorization", std::string("Bearer ") + key);

  auto res = client.Post(config_.path, headers, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) throw Timeout();
    throw RemoteError(0, httplib::to_string(err));
  }
  if (res->status != 200) throw RemoteError(res->status, res->body.substr(0, 200));

  std::string content;
  try {
    content = json::parse(res->body).at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw ExtractionFailed();
  }
  return respond(id(), extract_record_block(content), started, content);
}

}  // namespace notamkit
