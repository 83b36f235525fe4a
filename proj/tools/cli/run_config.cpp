#include "run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "notamkit/error.hpp"

namespace notamkit::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidConfig("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::set<std::string> kPathKeys = {"dataset",      "knowledge.graph", "knowledge.tables", "rules.rewrite",
                                         "rules.status", "rules.schema",    "rules.qcodes",     "mock.script",
                                         "toy.checkpoint", "out"};

const std::set<std::string> kKnownKeys = {
    "task", "dataset", "knowledge.graph", "knowledge.tables", "rules.rewrite", "rules.status", "rules.schema",
    "rules.qcodes", "backend", "mock.script", "toy.checkpoint", "remote.base_url", "remote.model",
    "remote.api_key_env", "remote.max_in_flight", "remote.path", "timeout_ms", "multiview.views",
    "multiview.concurrency", "evolve.max_iterations", "evolve.lookback", "evolve.error_threshold",
    "evolve.augmentation_count", "evolve.weight_sharpness", "evolve.dpo_beta", "evolve.target_accuracy",
    "evolve.sft_epochs", "evolve.dpo_epochs", "evolve.learning_rate", "evolve.train_fraction", "evolve.threads",
    "evolve.dpo_samples", "evolve.decode", "evolve.complexity_scale", "synthetic.rows", "synthetic.candidates",
    "synthetic.dimension", "synthetic.margin", "synthetic.seed", "seed", "out"};

std::string resolve(const std::string& value, const fs::path& base) {
  const fs::path p(value);
  return (p.is_absolute() ? p : (base / p)).lexically_normal().string();
}

void read_into(std::map<std::string, std::string>& values, const fs::path& file, std::string_view text,
               const fs::path& base, std::vector<fs::path>& stack) {
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidConfig(file.string() + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "include") {
      const fs::path inc = resolve(value, base);
      for (const auto& s : stack)
        if (fs::weakly_canonical(s) == fs::weakly_canonical(inc))
          throw InvalidConfig(file.string() + ":" + std::to_string(line_no) + ": include cycle through " + inc.string());
      stack.push_back(inc);
      read_into(values, inc, slurp(inc), inc.parent_path(), stack);
      stack.pop_back();
      continue;
    }
    if (!kKnownKeys.count(key))
      throw InvalidConfig(file.string() + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (key == "knowledge.tables") {
      std::string joined;
      std::istringstream parts(value);
      for (std::string p; std::getline(parts, p, ',');) {
        p = trim(p);
        if (p.empty()) continue;
        if (!joined.empty()) joined += ',';
        joined += resolve(p, base);
      }
      values[key] = joined;
    } else {
      values[key] = kPathKeys.count(key) && !value.empty() ? resolve(value, base) : value;
    }
  }
}

template <typename T>
T number(const std::map<std::string, std::string>& v, const std::string& key, T fallback) {
  const auto it = v.find(key);
  if (it == v.end()) return fallback;
  try {
    std::size_t used = 0;
    T out;
    if constexpr (std::is_floating_point_v<T>) out = static_cast<T>(std::stod(it->second, &used));
    else if constexpr (std::is_signed_v<T>) out = static_cast<T>(std::stoll(it->second, &used));
    else {
      if (!it->second.empty() && it->second[0] == '-') throw std::invalid_argument("negative");
      out = static_cast<T>(std::stoull(it->second, &used));
    }
    if (used != it->second.size()) throw std::invalid_argument("trailing text");
    return out;
  } catch (const std::exception&) {
    throw InvalidConfig("'" + key + "' is not a valid number: " + it->second);
  }
}

}  // namespace

RunConfig RunConfig::load(const fs::path& path) {
  return parse(slurp(path), fs::absolute(path).parent_path(), path.string());
}

RunConfig RunConfig::parse(std::string_view text, const fs::path& base_dir, const std::string& source) {
  RunConfig c;
  c.source = source;
  std::vector<fs::path> stack{source};
  read_into(c.values, source, text, base_dir, stack);
  const auto& v = c.values;
  auto str = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = v.find(key);
    if (it == v.end() || it->second.empty()) return std::nullopt;
    return it->second;
  };
  auto path = [&](const std::string& key) -> std::optional<fs::path> {
    if (auto s = str(key)) return fs::path(*s);
    return std::nullopt;
  };

  if (auto s = str("task")) c.task = *s;
  c.dataset = path("dataset");
  c.graph = path("knowledge.graph");
  if (auto s = str("knowledge.tables")) {
    std::istringstream parts(*s);
    for (std::string p; std::getline(parts, p, ',');) c.tables.emplace_back(p);
  }
  c.rewrite_rules = path("rules.rewrite");
  c.status_rules = path("rules.status");
  c.schema_rules = path("rules.schema");
  c.qcodes = path("rules.qcodes");
  if (auto s = str("backend")) c.backend = *s;
  c.mock_script = path("mock.script");
  c.toy_checkpoint = path("toy.checkpoint");
  if (auto s = str("remote.base_url")) c.remote.base_url = *s;
  if (auto s = str("remote.model")) c.remote.model = *s;
  if (auto s = str("remote.api_key_env")) c.remote.api_key_env = *s;
  if (auto s = str("remote.path")) c.remote.path = *s;
  c.remote.max_in_flight = number<std::size_t>(v, "remote.max_in_flight", c.remote.max_in_flight);
  c.timeout_ms = number<std::size_t>(v, "timeout_ms", c.timeout_ms);
  c.views = number<std::size_t>(v, "multiview.views", c.views);
  c.concurrency = number<std::size_t>(v, "multiview.concurrency", c.concurrency);

  c.seed = number<std::uint64_t>(v, "seed", c.seed);
  auto& e = c.evolve;
  e.max_iterations = number<int>(v, "evolve.max_iterations", e.max_iterations);
  e.lookback = number<int>(v, "evolve.lookback", e.lookback);
  e.error_threshold = number<double>(v, "evolve.error_threshold", e.error_threshold);
  e.augmentation_count = number<int>(v, "evolve.augmentation_count", e.augmentation_count);
  e.weight_sharpness = number<double>(v, "evolve.weight_sharpness", e.weight_sharpness);
  e.dpo_beta = number<double>(v, "evolve.dpo_beta", e.dpo_beta);
  e.target_accuracy = number<double>(v, "evolve.target_accuracy", e.target_accuracy);
  e.sft_epochs = number<int>(v, "evolve.sft_epochs", e.sft_epochs);
  e.dpo_epochs = number<int>(v, "evolve.dpo_epochs", e.dpo_epochs);
  e.learning_rate = number<double>(v, "evolve.learning_rate", e.learning_rate);
  e.train_fraction = number<double>(v, "evolve.train_fraction", e.train_fraction);
  e.threads = number<std::size_t>(v, "evolve.threads", e.threads);
  e.dpo_samples = number<std::size_t>(v, "evolve.dpo_samples", e.dpo_samples);
  e.seed = c.seed;
  if (auto d = str("evolve.decode")) c.evolve_decode = *d;
  if (v.count("evolve.complexity_scale")) c.complexity_scale = number<double>(v, "evolve.complexity_scale", 1.0);

  auto& s = c.synthetic;
  s.rows = number<std::size_t>(v, "synthetic.rows", s.rows);
  s.candidates = number<std::size_t>(v, "synthetic.candidates", s.candidates);
  s.dimension = number<std::size_t>(v, "synthetic.dimension", s.dimension);
  s.margin = number<double>(v, "synthetic.margin", s.margin);
  s.seed = number<std::uint64_t>(v, "synthetic.seed", c.seed);
  c.out = path("out");
  return c;
}

void RunConfig::validate() const {
  auto need = [](const std::optional<fs::path>& p, const std::string& key) {
    if (p && !fs::exists(*p)) throw InvalidConfig(key + ": no such file " + p->string());
  };
  if (task != "notams" && task != "synthetic") throw InvalidConfig("task must be 'notams' or 'synthetic'");
  need(dataset, "dataset");
  need(graph, "knowledge.graph");
  for (const auto& t : tables) need(t, "knowledge.tables");
  need(rewrite_rules, "rules.rewrite");
  need(status_rules, "rules.status");
  need(schema_rules, "rules.schema");
  need(qcodes, "rules.qcodes");
  need(mock_script, "mock.script");
  need(toy_checkpoint, "toy.checkpoint");
  if (!tables.empty() && !graph) throw InvalidConfig("knowledge.tables needs knowledge.graph");
  static const std::set<std::string> backends = {"rules", "grounded", "toy", "mock", "remote"};
  if (!backends.count(backend)) throw InvalidConfig("unknown backend '" + backend + "'");
  if (backend == "mock" && !mock_script) throw InvalidConfig("backend 'mock' needs mock.script");
  if (backend == "toy" && !toy_checkpoint) throw InvalidConfig("backend 'toy' needs toy.checkpoint");
  if (backend == "remote" && (remote.base_url.empty() || remote.model.empty()))
    throw InvalidConfig("backend 'remote' needs remote.base_url and remote.model");
  if (views == 0) throw InvalidConfig("multiview.views must be >= 1");
  if (concurrency == 0) throw InvalidConfig("multiview.concurrency must be >= 1");
  if (evolve_decode != "sample" && evolve_decode != "argmax")
    throw InvalidConfig("evolve.decode must be 'sample' or 'argmax'");
  evolve.validate();
}

std::string RunConfig::echo() const {
  std::string out;
  for (const auto& [k, v] : values) out += k + "=" + v + "\n";
  return out;
}

}  // namespace notamkit::cli
