#include "commands.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <nlohmann/json.hpp>
#include <sstream>

#include "notamkit/dataset.hpp"
#include "notamkit/evolve.hpp"
#include "notamkit/gateway.hpp"
#include "notamkit/multiview.hpp"
#include "notamkit/notam.hpp"
#include "notamkit/notam_policy.hpp"
#include "notamkit/pool.hpp"
#include "notamkit/record.hpp"
#include "notamkit/retrieval.hpp"
#include "notamkit/synthetic.hpp"
#include "run_config.hpp"

namespace notamkit::cli {

using nlohmann::json;

void write_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot write " + tmp.string());
    f << text;
    f.flush();
    if (!f) throw InputError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r") == std::string::npos; }

// ---------------------------------------------------------------------------
// inputs

struct InputNotice {
  std::string id;
  std::size_t line = 0;
  std::string raw;
  std::optional<std::string> gold;  // canonical
};

/// .jsonl: {"id", "notam", "gold"?} per line. Otherwise notices separated by
/// blank lines; a leading "# id: NAME" line names the notice.
std::vector<InputNotice> read_inputs(const fs::path& path) {
  const std::string text = slurp(path);
  const auto lines = lines_of(text);
  std::vector<InputNotice> out;
  if (path.extension() == ".jsonl") {
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (blank(lines[i])) continue;
      const std::string where = path.string() + ":" + std::to_string(i + 1);
      json j;
      try {
        j = json::parse(lines[i]);
      } catch (const json::exception& e) {
        throw InputError(where + ": " + e.what());
      }
      if (!j.is_object() || !j.contains("notam") || !j["notam"].is_string())
        throw InputError(where + ": expected an object with a string \"notam\"");
      InputNotice n;
      n.line = i + 1;
      n.id = j.value("id", "row-" + std::to_string(i + 1));
      n.raw = j["notam"].get<std::string>();
      if (j.contains("gold") && !j["gold"].is_null()) {
        try {
          n.gold = canonical_serialize(parse_record_list(j["gold"].dump()));
        } catch (const Error& e) {
          throw InputError(where + ": gold: " + e.what());
        }
      }
      out.push_back(std::move(n));
    }
    return out;
  }
  std::size_t i = 0;
  while (i < lines.size()) {
    while (i < lines.size() && blank(lines[i])) ++i;
    if (i >= lines.size()) break;
    InputNotice n;
    n.id = "notice-" + std::to_string(out.size() + 1);
    while (i < lines.size() && !blank(lines[i]) && lines[i][0] == '#') {
      const auto& c = lines[i];
      const auto k = c.find("id:");
      if (k != std::string::npos) {
        auto v = c.substr(k + 3);
        v.erase(0, v.find_first_not_of(' '));
        if (!v.empty()) n.id = v;
      }
      ++i;
    }
    n.line = i + 1;
    while (i < lines.size() && !blank(lines[i])) {
      n.raw += lines[i] + "\n";
      ++i;
    }
    if (!n.raw.empty()) out.push_back(std::move(n));
  }
  return out;
}

// ---------------------------------------------------------------------------
// configuration and resources

RunConfig load_config(const GlobalOptions& opts, bool required) {
  RunConfig cfg;
  if (opts.config) cfg = RunConfig::load(*opts.config);
  else if (required) throw InvalidConfig("this command needs --config");
  if (opts.seed) {
    const bool explicit_synthetic_seed = cfg.values.count("synthetic.seed") > 0;
    cfg.seed = *opts.seed;
    cfg.evolve.seed = *opts.seed;
    if (!explicit_synthetic_seed) cfg.synthetic.seed = *opts.seed;
    cfg.values["seed"] = std::to_string(*opts.seed);
  }
  if (opts.out) cfg.out = *opts.out;
  cfg.validate();
  return cfg;
}

struct Resources {
  RuleSet rules = RuleSet::builtin();
  SchemaRuleSet schema = SchemaRuleSet::builtin();
  QCodeLexicon lexicon = QCodeLexicon::builtin();
  RewriteRuleTable rewrite = RewriteRuleTable::builtin();
  std::optional<KnowledgeStore> store;
};

Resources load_resources(const RunConfig& cfg, bool want_knowledge) {
  Resources r;
  if (cfg.status_rules) r.rules = RuleSet::load(*cfg.status_rules);
  if (cfg.schema_rules) r.schema = SchemaRuleSet::load(*cfg.schema_rules);
  if (cfg.qcodes) r.lexicon = QCodeLexicon::load(*cfg.qcodes);
  if (cfg.rewrite_rules) r.rewrite = RewriteRuleTable::load(*cfg.rewrite_rules);
  if (want_knowledge && cfg.graph) r.store = load_knowledge(*cfg.graph, cfg.tables);
  return r;
}

KnowledgeBundle retrieve_for(const Notam& notam, const Resources& res, const std::string& id, std::ostream& err) {
  if (!res.store) return {};
  auto bundle = kg_tablerag_retrieve(notam, *res.store, res.lexicon);
  if (bundle.airport_missing)
    err << "warning: " << id << ": " << (bundle.diagnostic.empty() ? "airport not in knowledge graph" : bundle.diagnostic)
        << "; continuing without knowledge\n";
  return bundle;
}

std::unique_ptr<Backend> make_backend(const RunConfig& cfg, const Resources& res) {
  if (cfg.backend == "rules") return std::make_unique<RuleBackend>(res.rules);
  if (cfg.backend == "grounded") return std::make_unique<GroundedRuleBackend>(res.rules, res.schema);
  if (cfg.backend == "mock") return std::make_unique<MockBackend>(MockBackend::load(*cfg.mock_script));
  if (cfg.backend == "toy") {
    LogLinearPolicy blank(std::make_shared<NotamFeaturizer>(res.rules));
    return std::make_unique<ToyBackend>(blank.restore(slurp(*cfg.toy_checkpoint)));
  }
  return std::make_unique<RemoteBackend>(cfg.remote);
}

json nullable(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

// ---------------------------------------------------------------------------
// pipeline shared by baseline and infer

struct PipelineSettings {
  bool use_knowledge = true;
  std::size_t views = 1;
  bool force_rules = false;
  const char* eval_file = "eval.json";
};

int run_pipeline(const GlobalOptions& opts, const fs::path& input, const PipelineSettings& settings,
                 std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load_config(opts, false);
  const Resources res = load_resources(cfg, settings.use_knowledge);
  const std::unique_ptr<Backend> backend =
      settings.force_rules ? std::make_unique<RuleBackend>(res.rules) : make_backend(cfg, res);
  MultiviewOptions mv;
  mv.views = settings.views;
  mv.seed = cfg.seed;
  mv.concurrency = cfg.concurrency;
  mv.timeout = std::chrono::milliseconds(cfg.timeout_ms);

  int code = kOk;
  std::size_t graded = 0, correct = 0;
  json rows = json::array();
  for (const auto& n : read_inputs(input)) {
    Notam notam;
    try {
      notam = parse_notam(n.raw, n.id);
    } catch (const Error& e) {
      err << input.string() << ":" << n.line << ": " << n.id << ": " << e.what() << "\n";
      code = kInputError;
      continue;
    }
    const auto bundle = settings.use_knowledge ? retrieve_for(notam, res, n.id, err) : KnowledgeBundle{};
    MultiviewResult result;
    try {
      result = multiview_infer(notam, bundle, *backend, res.rewrite, mv, n.id);
    } catch (const MultiviewDegraded& e) {
      err << "error: " << n.id << ": " << e.what() << "\n";
      code = std::max<int>(code, kDegraded);
      continue;
    }
    for (const auto& f : result.failures) err << "warning: " << n.id << ": view failed: " << f << "\n";
    const std::string records = canonical_serialize(result.records);
    out << "{\"id\":" << json(n.id).dump() << ",\"records\":" << records << "}\n";
    if (n.gold) {
      ++graded;
      const bool ok = *n.gold == records;
      correct += ok;
      rows.push_back({{"id", n.id}, {"correct", ok}});
    }
  }
  if (graded > 0) {
    const double acc = static_cast<double>(correct) / static_cast<double>(graded);
    err << "accuracy: " << correct << "/" << graded << " = " << std::fixed << std::setprecision(3) << acc << "\n";
    if (cfg.out) {
      json eval = {{"accuracy", acc}, {"correct", correct}, {"total", graded}, {"rows", rows},
                   {"backend", settings.force_rules ? "rules" : cfg.backend}, {"views", settings.views},
                   {"knowledge", settings.use_knowledge && res.store.has_value()}};
      write_atomic(*cfg.out / settings.eval_file, eval.dump(2) + "\n");
    }
  }
  return code;
}

// ---------------------------------------------------------------------------
// evolve

std::vector<TrainingRow> notam_rows(const RunConfig& cfg, const Resources& res, bool use_knowledge,
                                    std::ostream& err) {
  if (!cfg.dataset) throw InvalidConfig("task 'notams' needs dataset");
  std::vector<TrainingRow> rows;
  for (const auto& n : read_inputs(*cfg.dataset)) {
    if (!n.gold) throw InputError(cfg.dataset->string() + ":" + std::to_string(n.line) + ": row has no gold");
    TrainingRow r;
    r.input_id = n.id;
    try {
      r.notam = parse_notam(n.raw, n.id);
    } catch (const Error& e) {
      throw InputError(cfg.dataset->string() + ":" + std::to_string(n.line) + ": " + e.what());
    }
    if (use_knowledge) r.knowledge = retrieve_for(*r.notam, res, n.id, err);
    r.gold = *n.gold;
    r.input = make_notam_input(*r.notam, r.knowledge,
                               enumerate_notam_candidates(*r.notam, r.knowledge, r.gold, 32, res.rules), n.id);
    rows.push_back(std::move(r));
  }
  return rows;
}

json metrics_json(const IterationMetrics& m) {
  return json{{"iteration", m.iteration},
              {"phase1_accuracy", m.phase1_accuracy},
              {"phase2_accuracy", m.phase2_accuracy},
              {"test_accuracy", m.test_accuracy},
              {"sft_rows", m.sft_rows},
              {"sft_loss_before", m.sft_loss_before},
              {"sft_loss_after", m.sft_loss_after},
              {"preference_triples", m.preference_triples},
              {"augmented_triples", m.augmented_triples},
              {"dpo_skipped", m.dpo_skipped},
              {"dpo_loss_before", m.dpo_loss_before},
              {"dpo_loss_after", m.dpo_loss_after},
              {"observed_pairs", m.observed_pairs},
              {"effective_pairs", m.effective_pairs},
              {"inverse_weight_expectation", m.inverse_weight_expectation},
              {"pool_size", m.pool_size},
              {"generation_failures", m.generation_failures},
              {"target_reached", m.target_reached}};
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string checkpoint_name(int iteration) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "checkpoints/iter-%03d.policy", iteration);
  return buf;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

std::vector<std::string> nonblank_lines(const fs::path& path) {
  std::vector<std::string> out;
  if (!fs::exists(path)) return out;
  for (auto& l : lines_of(slurp(path)))
    if (!blank(l)) out.push_back(std::move(l));
  return out;
}

// ---------------------------------------------------------------------------
// report

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void print(std::ostream& out) const {
    std::vector<std::size_t> w(header.size(), 0);
    for (std::size_t c = 0; c < header.size(); ++c) w[c] = header[c].size();
    for (const auto& r : rows)
      for (std::size_t c = 0; c < r.size() && c < w.size(); ++c) w[c] = std::max(w[c], r[c].size());
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t c = 0; c < w.size(); ++c) {
        const std::string cell = c < r.size() ? r[c] : "";
        if (c) out << "  ";
        if (c == 0) out << std::left << std::setw(static_cast<int>(w[c])) << cell;
        else out << std::right << std::setw(static_cast<int>(w[c])) << cell;
      }
      out << "\n";
    };
    line(header);
    std::size_t total = 0;
    for (auto x : w) total += x;
    out << std::string(total + 2 * (w.size() - 1), '-') << "\n";
    for (const auto& r : rows) line(r);
    out << std::left;
  }
};

std::string fmt(double v, int precision) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(precision) << v;
  return ss.str();
}

struct RunHistory {
  fs::path dir;
  json manifest;
  std::vector<json> metrics;
  std::map<int, double> seconds;
};

RunHistory load_run(const fs::path& dir) {
  RunHistory h;
  h.dir = dir;
  const auto mpath = dir / "manifest.json";
  if (!fs::exists(mpath)) throw MissingManifest(dir);
  try {
    h.manifest = json::parse(slurp(mpath));
    for (const auto& l : nonblank_lines(dir / "metrics.jsonl")) h.metrics.push_back(json::parse(l));
    for (const auto& l : nonblank_lines(dir / "timing.jsonl")) {
      const auto t = json::parse(l);
      h.seconds[t.at("iteration").get<int>()] = t.at("seconds").get<double>();
    }
  } catch (const json::exception& e) {
    throw InputError(dir.string() + ": " + e.what());
  }
  return h;
}

void report_one(const RunHistory& h, std::ostream& out) {
  const auto& m = h.manifest;
  out << "Run " << h.dir.string() << ": " << m.value("status", "unknown") << ", "
      << m.value("iterations_completed", 0) << " iterations";
  if (m.contains("final_test_accuracy"))
    out << ", final test accuracy " << fmt(m["final_test_accuracy"].get<double>(), 3);
  out << "\n\nAccuracy by iteration\n";
  Table acc{{"iter", "phase-1 train", "phase-2 train", "test", "SFT rows", "triples", "augmented"}, {}};
  auto num = [](const json& r, const char* key, int precision) -> std::string {
    return r.contains(key) ? fmt(r[key].get<double>(), precision) : "-";
  };
  for (const auto& r : h.metrics)
    acc.rows.push_back({std::to_string(r.value("iteration", 0)), num(r, "phase1_accuracy", 3),
                        num(r, "phase2_accuracy", 3), num(r, "test_accuracy", 3), num(r, "sft_rows", 0),
                        num(r, "preference_triples", 0), num(r, "augmented_triples", 0)});
  acc.print(out);

  if (h.metrics.empty()) {
    out << "\nComplexity: no completed iterations\n";
    return;
  }
  std::vector<ComplexityInput> history;
  for (const auto& r : h.metrics) {
    ComplexityInput c;
    c.iteration = r.value("iteration", 0);
    c.accuracy = r.value("test_accuracy", 0.0);
    c.observed_pairs = r.value("observed_pairs", 0.0);
    c.effective_pairs = r.value("effective_pairs", 0.0);
    const auto s = h.seconds.find(c.iteration);
    c.seconds = s == h.seconds.end() ? 0.0 : s->second;
    if (r.contains("theoretical_pairs")) c.theoretical_pairs = r["theoretical_pairs"].get<double>();
    history.push_back(c);
  }
  std::optional<double> k;
  if (m.contains("config") && m["config"].contains("evolve.complexity_scale"))
    k = std::stod(m["config"]["evolve.complexity_scale"].get<std::string>());
  const auto report = complexity_report(history, k);
  out << "\nComplexity (K = " << fmt(report.scale_constant, 4) << ")\n";
  Table cx{{"iter", "theoretical pairs", "observed pairs", "effective pairs", "effective/theoretical", "time (s)",
            "scale"},
           {}};
  for (const auto& r : report.rows)
    cx.rows.push_back({std::to_string(r.iteration), fmt(r.theoretical_pairs, 0), fmt(r.observed_pairs, 0),
                       fmt(r.effective_pairs, 0), fmt(r.ratio, 3), fmt(r.seconds, 2),
                       fmt(r.scale_factor, 1) + "x"});
  cx.print(out);
}

void report_comparison(const std::vector<RunHistory>& runs, std::ostream& out) {
  std::size_t width = 0;
  for (const auto& r : runs) width = std::max(width, r.metrics.size());
  Table t;
  t.header.push_back("run");
  for (std::size_t i = 1; i <= width; ++i) t.header.push_back("iter " + std::to_string(i));
  t.header.push_back("final");
  t.header.push_back("AVG");
  double final_sum = 0.0, avg_sum = 0.0;
  for (const auto& r : runs) {
    std::vector<std::string> row{r.dir.filename().empty() ? r.dir.parent_path().filename().string()
                                                         : r.dir.filename().string()};
    double sum = 0.0;
    for (std::size_t i = 0; i < width; ++i) {
      if (i < r.metrics.size()) {
        const double a = r.metrics[i].value("test_accuracy", 0.0);
        sum += a;
        row.push_back(fmt(a, 3));
      } else {
        row.push_back("-");
      }
    }
    const double fin = r.manifest.value("final_test_accuracy",
                                        r.metrics.empty() ? 0.0 : r.metrics.back().value("test_accuracy", 0.0));
    const double avg = r.metrics.empty() ? fin : sum / static_cast<double>(r.metrics.size());
    final_sum += fin;
    avg_sum += avg;
    row.push_back(fmt(fin, 3));
    row.push_back(fmt(avg, 3));
    t.rows.push_back(std::move(row));
  }
  std::vector<std::string> mean{"AVG"};
  for (std::size_t i = 0; i < width; ++i) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& r : runs)
      if (i < r.metrics.size()) s += r.metrics[i].value("test_accuracy", 0.0), ++n;
    mean.push_back(n ? fmt(s / static_cast<double>(n), 3) : "-");
  }
  mean.push_back(fmt(final_sum / static_cast<double>(runs.size()), 3));
  mean.push_back(fmt(avg_sum / static_cast<double>(runs.size()), 3));
  t.rows.push_back(std::move(mean));
  out << "Comparison (test accuracy)\n";
  t.print(out);
}

}  // namespace

// ---------------------------------------------------------------------------

int cmd_parse(const GlobalOptions&, const fs::path& input, std::ostream& out, std::ostream& err) {
  int code = kOk;
  for (const auto& n : read_inputs(input)) {
    try {
      const Notam p = parse_notam(n.raw, n.id);
      json j = {{"id", n.id}, {"line", n.line}};
      if (p.q_line) {
        const auto& q = *p.q_line;
        j["fir"] = q.fir;
        j["qcode"] = q.qcode;
        j["traffic"] = q.traffic;
        j["purpose"] = q.purpose;
        j["scope"] = q.scope;
        j["lower_limit"] = q.lower_limit;
        j["upper_limit"] = q.upper_limit;
        j["coordinates"] = q.coordinates_radius;
      } else {
        j["qcode"] = nullptr;
      }
      j["location"] = nullable(p.location);
      j["valid_from"] = nullable(p.valid_from);
      j["valid_to"] = nullable(p.valid_to);
      j["schedule"] = nullable(p.schedule);
      j["body"] = p.body;
      j["lower_vertical"] = nullable(p.lower_vertical);
      j["upper_vertical"] = nullable(p.upper_vertical);
      out << j.dump() << "\n";
    } catch (const Error& e) {
      err << input.string() << ":" << n.line << ": " << n.id << ": " << e.what() << "\n";
      code = kInputError;
    }
  }
  return code;
}

int cmd_retrieve(const GlobalOptions& opts, const fs::path& input, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load_config(opts, true);
  if (!cfg.graph) throw InvalidConfig("retrieve needs knowledge.graph");
  const Resources res = load_resources(cfg, true);
  int code = kOk;
  for (const auto& n : read_inputs(input)) {
    Notam notam;
    try {
      notam = parse_notam(n.raw, n.id);
    } catch (const Error& e) {
      err << input.string() << ":" << n.line << ": " << n.id << ": " << e.what() << "\n";
      code = kInputError;
      continue;
    }
    const auto bundle = retrieve_for(notam, res, n.id, err);
    json facts = json::array(), rows = json::array();
    for (const auto& f : bundle.graph_facts) facts.push_back({{"text", f.text}, {"provenance", f.provenance}});
    for (const auto& r : bundle.table_rows) rows.push_back({{"text", r.render()}, {"provenance", r.provenance}});
    out << json{{"id", n.id},
                {"airport_missing", bundle.airport_missing},
                {"snapshot", res.store->snapshot},
                {"facts", facts},
                {"rows", rows}}
               .dump()
        << "\n";
  }
  return code;
}

int cmd_baseline(const GlobalOptions& opts, const fs::path& input, std::ostream& out, std::ostream& err) {
  PipelineSettings s;
  s.use_knowledge = false;
  s.views = 1;
  s.force_rules = true;
  s.eval_file = "baseline.json";
  return run_pipeline(opts, input, s, out, err);
}

int cmd_infer(const GlobalOptions& opts, const fs::path& input, std::ostream& out, std::ostream& err) {
  PipelineSettings s;
  s.use_knowledge = !opts.no_kg;
  s.views = 0;
  if (opts.config) s.views = RunConfig::load(*opts.config).views;
  if (s.views == 0) s.views = 5;
  if (opts.no_multiview) s.views = 1;
  return run_pipeline(opts, input, s, out, err);
}

int cmd_evolve(const GlobalOptions& opts, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load_config(opts, true);
  if (!cfg.out) throw InvalidConfig("evolve needs an output directory (--out or out =)");
  const fs::path dir = *cfg.out;

  // Everything that determines the run goes into the hash; the output path
  // does not.
  std::string identity;
  for (const auto& [k, v] : cfg.values)
    if (k != "out") identity += k + "=" + v + "\n";
  identity += "no_kg=" + std::to_string(opts.no_kg) + "\n";
  const std::string config_hash = hex64(fnv1a(identity));

  const Resources res = load_resources(cfg, !opts.no_kg);
  std::vector<TrainingRow> rows;
  std::shared_ptr<const Featurizer> featurizer;
  if (cfg.task == "synthetic") {
    auto task = make_synthetic_task(cfg.synthetic);
    rows = std::move(task.rows);
    if (opts.no_kg)
      for (auto& r : rows) {
        r.knowledge = {};
        r.input.knowledge.clear();
      }
    featurizer = task.featurizer;
  } else {
    rows = notam_rows(cfg, res, !opts.no_kg, err);
    featurizer = std::make_shared<NotamFeaturizer>(res.rules);
  }
  const Dataset data = split_dataset(std::move(rows), cfg.evolve.train_fraction, cfg.seed);

  if (opts.fresh && fs::exists(dir)) {
    for (const char* f : {"manifest.json", "metrics.jsonl", "timing.jsonl", "pool.jsonl", "policy.final"})
      fs::remove(dir / f);
    fs::remove_all(dir / "checkpoints");
  }
  fs::create_directories(dir / "checkpoints");

  EvolveState state{LogLinearPolicy(featurizer), {}, 0};
  std::vector<std::string> metric_lines, timing_lines;
  const fs::path manifest_path = dir / "manifest.json";
  if (fs::exists(manifest_path)) {
    const json prev = json::parse(slurp(manifest_path));
    if (prev.value("config_hash", "") != config_hash)
      throw InvalidConfig(dir.string() + " holds a run with a different configuration; use --fresh");
    const int k = prev.value("iterations_completed", 0);
    if (k > 0) state.policy = state.policy.restore(slurp(dir / checkpoint_name(k)));
    state.iteration = k;
    // Drop anything written after the last completed iteration.
    const ResponsePool replayed = replay_pool_file(dir / "pool.jsonl");
    std::vector<std::string> kept;
    for (const auto& e : replayed.entries())
      if (e.iteration <= k) {
        state.pool.append(e);
        kept.push_back(pool_entry_to_json(e));
      }
    write_atomic(dir / "pool.jsonl", join_lines(kept));
    metric_lines = nonblank_lines(dir / "metrics.jsonl");
    timing_lines = nonblank_lines(dir / "timing.jsonl");
    metric_lines.resize(std::min<std::size_t>(metric_lines.size(), static_cast<std::size_t>(k)));
    timing_lines.resize(std::min<std::size_t>(timing_lines.size(), static_cast<std::size_t>(k)));
    if (prev.value("status", "") == "complete") {
      out << "run already complete: final test accuracy " << fmt(prev.value("final_test_accuracy", 0.0), 3)
          << " after " << k << " iterations\n";
      return kOk;
    }
    if (k > 0) err << "resuming " << dir.string() << " after iteration " << k << "\n";
  } else {
    write_atomic(dir / "pool.jsonl", "");
  }

  json config_echo = json::object();
  for (const auto& [k, v] : cfg.values)
    if (k != "out") config_echo[k] = v;

  auto write_manifest = [&](const std::string& status, int completed, bool reached, double final_acc) {
    json trajectory = json::array();
    json checkpoints = json::array();
    for (const auto& l : metric_lines) trajectory.push_back(json::parse(l).at("test_accuracy"));
    for (int i = 1; i <= completed; ++i) checkpoints.push_back(checkpoint_name(i));
    json m = {{"format", "notamkit-run/1"},
              {"command", "evolve"},
              {"config", config_echo},
              {"config_hash", config_hash},
              {"task", cfg.task},
              {"knowledge", !opts.no_kg},
              {"train_rows", data.train.size()},
              {"test_rows", data.test.size()},
              {"status", status},
              {"iterations_completed", completed},
              {"target_reached", reached},
              {"final_test_accuracy", final_acc},
              {"accuracy_trajectory", trajectory},
              {"checkpoints", checkpoints},
              {"final_checkpoint", "policy.final"}};
    write_atomic(manifest_path, m.dump(2) + "\n");
  };
  if (!fs::exists(manifest_path)) write_manifest("running", 0, false, 0.0);

  const PolicyResponder responder(cfg.evolve_decode == "sample", cfg.seed);
  const RewriteVariantSource variants(res.rewrite);
  EvolveConfig ecfg = cfg.evolve;
  const bool interrupted = opts.stop_after && *opts.stop_after < ecfg.max_iterations;
  if (interrupted) ecfg.max_iterations = std::max(*opts.stop_after, state.iteration);

  // A crash between the last iteration and the final manifest leaves
  // nothing to run.
  const bool already_reached =
      !metric_lines.empty() && json::parse(metric_lines.back()).value("target_reached", false);
  if (already_reached) ecfg.max_iterations = state.iteration;

  auto summary = run_evolve(state, data, ecfg, responder, &variants,
                                  [&](const EvolveState& s, const IterationResult& r) {
                                    write_atomic(dir / checkpoint_name(s.iteration), s.policy.checkpoint());
                                    append_pool_file(dir / "pool.jsonl", r.new_entries);
                                    metric_lines.push_back(metrics_json(r.metrics).dump());
                                    timing_lines.push_back(
                                        json{{"iteration", s.iteration}, {"seconds", r.seconds}}.dump());
                                    write_atomic(dir / "metrics.jsonl", join_lines(metric_lines));
                                    write_atomic(dir / "timing.jsonl", join_lines(timing_lines));
                                    write_manifest("running", s.iteration, r.metrics.target_reached,
                                                   r.metrics.test_accuracy);
                                  });

  if (already_reached) summary.target_reached = true;
  if (interrupted && !summary.target_reached) {
    out << "stopped after iteration " << state.iteration << "; rerun to resume\n";
    return kOk;
  }
  const double final_acc = state.iteration == 0 ? accuracy(state.policy, data.test) : summary.final_test_accuracy;
  write_atomic(dir / "policy.final", state.policy.checkpoint());
  write_atomic(dir / "metrics.jsonl", join_lines(metric_lines));
  write_manifest("complete", state.iteration, summary.target_reached, final_acc);
  out << "final test accuracy " << fmt(final_acc, 3) << " after " << state.iteration << " iterations"
      << (summary.target_reached ? " (target reached)" : "") << "\n";
  return kOk;
}

int cmd_report(const GlobalOptions&, const std::vector<fs::path>& runs, std::ostream& out, std::ostream&) {
  std::vector<RunHistory> histories;
  for (const auto& r : runs) histories.push_back(load_run(r));
  for (std::size_t i = 0; i < histories.size(); ++i) {
    if (i) out << "\n";
    report_one(histories[i], out);
  }
  if (histories.size() > 1) {
    out << "\n";
    report_comparison(histories, out);
  }
  return kOk;
}

}  // namespace notamkit::cli
