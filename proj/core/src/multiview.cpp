#include "notamkit/multiview.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "notamkit/error.hpp"
#include "notamkit/resources.hpp"
#include "parallel.hpp"
#include "text_util.hpp"

namespace notamkit {

namespace {

const std::vector<std::string> kKnownTransforms = {"lexical", "voice", "reorder", "expand"};
const std::set<std::string> kCopulas = {"IS", "ARE"};

struct Token {
  std::string core;
  std::string suffix;  // trailing punctuation
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  for (auto& w : detail::split_words(text)) {
    std::size_t end = w.size();
    while (end > 1 && std::string_view(".,;:").find(w[end - 1]) != std::string_view::npos) --end;
    out.push_back({w.substr(0, end), w.substr(end)});
  }
  return out;
}

std::string join(const std::vector<Token>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t.core + t.suffix;
  }
  return out;
}

bool same(const std::vector<Token>& a, const std::vector<Token>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].core != b[i].core || a[i].suffix != b[i].suffix) return false;
  return true;
}

struct Substitution {
  std::vector<std::string> from;  // uppercased words
  std::vector<std::string> to;    // words as written
};

std::vector<Token> substitute(const std::vector<Token>& in, std::vector<Substitution> subs,
                              const RewriteRuleTable& rules) {
  std::stable_sort(subs.begin(), subs.end(), [](const auto& a, const auto& b) { return a.from.size() > b.from.size(); });
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < in.size()) {
    const Substitution* hit = nullptr;
    for (const auto& s : subs) {
      if (i + s.from.size() > in.size()) continue;
      bool ok = true;
      for (std::size_t j = 0; ok && j < s.from.size(); ++j) {
        const auto& t = in[i + j];
        ok = detail::to_upper(t.core) == s.from[j] && !rules.is_protected(t.core) &&
             (j + 1 == s.from.size() || t.suffix.empty());
      }
      if (ok) {
        hit = &s;
        break;
      }
    }
    if (!hit) {
      out.push_back(in[i++]);
      continue;
    }
    for (std::size_t j = 0; j < hit->to.size(); ++j)
      out.push_back({hit->to[j], j + 1 == hit->to.size() ? in[i + hit->from.size() - 1].suffix : ""});
    i += hit->from.size();
  }
  return out;
}

std::vector<Token> apply_lexical(const std::vector<Token>& in, const RewriteRuleTable& rules) {
  std::vector<Substitution> subs;
  for (const auto& [a, b] : rules.lexical_pairs) {
    subs.push_back({detail::split_words(detail::to_upper(a)), detail::split_words(b)});
    subs.push_back({detail::split_words(detail::to_upper(b)), detail::split_words(a)});
  }
  return substitute(in, std::move(subs), rules);
}

std::vector<Token> apply_expand(const std::vector<Token>& in, const RewriteRuleTable& rules) {
  std::vector<Substitution> subs;
  for (const auto& [a, b] : rules.expansions)
    subs.push_back({detail::split_words(detail::to_upper(a)), detail::split_words(b)});
  return substitute(in, std::move(subs), rules);
}

bool has_lower(const std::string& s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::islower(c); });
}

// "X CLSD" <-> "X IS CLSD".
std::vector<Token> apply_voice(const std::vector<Token>& in, const RewriteRuleTable& rules) {
  std::vector<Token> out;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const std::string up = detail::to_upper(in[i].core);
    if (rules.predicates.count(up) && !out.empty() && out.back().suffix.empty()) {
      const std::string prev = detail::to_upper(out.back().core);
      if (kCopulas.count(prev)) {
        out.pop_back();
      } else if (prev != "NOT" && prev != "NO" && !rules.predicates.count(prev)) {
        out.push_back({has_lower(in[i].core) ? "is" : "IS", ""});
      }
    }
    out.push_back(in[i]);
  }
  return out;
}

// Moves the first sentence (or, in a single sentence, the first clause) to the end.
std::vector<Token> apply_reorder(const std::vector<Token>& in, const RewriteRuleTable&) {
  for (const char mark : {'.', ','}) {
    std::vector<std::vector<Token>> parts(1);
    for (const auto& t : in) {
      parts.back().push_back(t);
      if (t.suffix.find(mark) != std::string::npos) parts.emplace_back();
    }
    if (parts.back().empty()) parts.pop_back();
    if (parts.size() < 2) continue;
    auto& tail = parts.back().back();
    if (tail.suffix.find(mark) == std::string::npos) tail.suffix += mark;
    std::rotate(parts.begin(), parts.begin() + 1, parts.end());
    std::vector<Token> out;
    for (auto& p : parts)
      for (auto& t : p) out.push_back(std::move(t));
    return out;
  }
  return in;
}

std::vector<Token> apply_transform(const std::string& id, const std::vector<Token>& in, const RewriteRuleTable& rules) {
  if (id == "lexical") return apply_lexical(in, rules);
  if (id == "voice") return apply_voice(in, rules);
  if (id == "reorder") return apply_reorder(in, rules);
  if (id == "expand") return apply_expand(in, rules);
  throw Error("unknown transform '" + id + "'");
}

std::string canonical_or_self(const std::string& s) {
  try {
    return canonical_serialize(parse_record_list(s));
  } catch (const InvalidRecord&) {
    return s;
  }
}

}  // namespace

RewriteRuleTable RewriteRuleTable::parse(std::string_view text, const std::string& source) {
  RewriteRuleTable t;
  std::string section;
  std::size_t line_no = 0;
  for (const auto& raw : detail::split_lines(text)) {
    ++line_no;
    const std::string line = detail::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = line.substr(1, line.size() - 2);
      if (section != "lexical" && section != "expand" && section != "predicates" && section != "protected" &&
          section != "transforms")
        throw FormatError(source, line_no, "unknown section [" + section + "]");
      continue;
    }
    if (section.empty()) throw FormatError(source, line_no, "entry outside a section");
    if (section == "lexical" || section == "expand") {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw FormatError(source, line_no, "expected 'PHRASE = PHRASE'");
      std::string a = detail::trim(line.substr(0, eq)), b = detail::trim(line.substr(eq + 1));
      if (a.empty() || b.empty()) throw FormatError(source, line_no, "empty phrase");
      (section == "lexical" ? t.lexical_pairs : t.expansions).emplace_back(std::move(a), std::move(b));
    } else if (section == "predicates") {
      t.predicates.insert(detail::to_upper(line));
    } else if (section == "protected") {
      if (line == "@digits") t.protect_digits = true;
      else if (line[0] == '@') throw FormatError(source, line_no, "unknown token class '" + line + "'");
      else t.protected_tokens.insert(detail::to_upper(line));
    } else {
      t.transforms.push_back(line);
    }
  }
  t.validate(source);
  return t;
}

RewriteRuleTable RewriteRuleTable::load(const std::filesystem::path& path) {
  return parse(detail::read_file(path), path.string());
}

const RewriteRuleTable& RewriteRuleTable::builtin() {
  static const RewriteRuleTable t = parse(resources::rewrite_rules(), "builtin:rewrite.txt");
  return t;
}

bool RewriteRuleTable::is_protected(std::string_view token) const {
  return (protect_digits && detail::has_digit(token)) || protected_tokens.count(detail::to_upper(token)) > 0;
}

void RewriteRuleTable::validate(const std::string& source) const {
  auto check_phrase = [&](const std::string& phrase) {
    for (const auto& w : detail::split_words(phrase))
      if (is_protected(w)) throw FormatError(source, 0, "phrase '" + phrase + "' contains protected token '" + w + "'");
  };
  for (const auto& [a, b] : lexical_pairs) {
    check_phrase(a);
    check_phrase(b);
  }
  for (const auto& [a, b] : expansions) {
    check_phrase(a);
    check_phrase(b);
  }
  for (const auto& c : kCopulas)
    if (is_protected(c)) throw FormatError(source, 0, "copula '" + c + "' cannot be protected");
  std::set<std::string> seen;
  for (const auto& id : transforms) {
    if (std::find(kKnownTransforms.begin(), kKnownTransforms.end(), id) == kKnownTransforms.end())
      throw FormatError(source, 0, "unknown transform '" + id + "'");
    if (!seen.insert(id).second) throw FormatError(source, 0, "transform '" + id + "' listed twice");
  }
}

RewriteRuleTable RewriteRuleTable::with_protected(const std::vector<std::string>& extra) const {
  RewriteRuleTable t = *this;
  for (const auto& e : extra)
    if (!e.empty()) t.protected_tokens.insert(detail::to_upper(e));
  t.validate("<protected>");
  return t;
}

RewriteResult rewrite(std::string_view body, std::size_t variant_index, std::uint64_t seed,
                      const RewriteRuleTable& rules) {
  RewriteResult res{std::string(body), true, {}};
  if (variant_index == 0 || rules.transforms.empty()) return res;
  const auto original = tokenize(body);

  const std::size_t masks = (std::size_t{1} << rules.transforms.size()) - 1;
  const auto order = seeded_permutation(masks, seed);
  for (std::size_t attempt = 0; attempt < masks; ++attempt) {
    const std::size_t mask = order[(variant_index - 1 + attempt) % masks] + 1;
    auto tokens = original;
    std::vector<std::string> applied;
    for (std::size_t t = 0; t < rules.transforms.size(); ++t) {
      if (!(mask & (std::size_t{1} << t))) continue;
      auto next = apply_transform(rules.transforms[t], tokens, rules);
      if (!same(next, tokens)) applied.push_back(rules.transforms[t]);
      tokens = std::move(next);
    }
    if (!same(tokens, original)) {
      res.text = join(tokens);
      res.noop = false;
      res.applied = std::move(applied);
      return res;
    }
  }
  return res;
}

std::vector<std::string> protected_tokens_of(std::string_view text, const RewriteRuleTable& rules) {
  std::vector<std::string> out;
  for (const auto& t : tokenize(text))
    if (rules.is_protected(t.core)) out.push_back(t.core);
  std::sort(out.begin(), out.end());
  return out;
}

std::string vote(const std::vector<std::string>& serialized) {
  if (serialized.empty()) throw Error("vote needs at least one candidate");
  std::map<std::string, std::size_t> counts;
  for (const auto& s : serialized) ++counts[canonical_or_self(s)];
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it)
    if (it->second > best->second) best = it;
  return best->first;
}

RecordList vote(const std::vector<RecordList>& candidates) {
  std::vector<std::string> s;
  s.reserve(candidates.size());
  for (const auto& c : candidates) s.push_back(canonical_serialize(c));
  return parse_record_list(vote(s));
}

MultiviewResult multiview_infer(const Notam& notam, const KnowledgeBundle& knowledge, const Backend& backend,
                                const RewriteRuleTable& rules, const MultiviewOptions& options,
                                const std::string& input_id) {
  if (options.views == 0) throw InvalidConfig("multiview needs at least one view");
  const auto table = notam.location ? rules.with_protected({*notam.location}) : rules;
  const std::size_t n = options.views;

  MultiviewResult res;
  std::vector<Notam> views(n, notam);
  for (std::size_t k = 1; k < n; ++k) {
    views[k].body = rewrite(notam.body, k, options.seed, table).text;
    views[k].raw_text = serialize_notam(views[k]);
  }
  for (const auto& v : views) res.variant_bodies.push_back(v.body);

  res.outputs.assign(n, std::nullopt);
  std::vector<std::string> failures(n);
  detail::parallel_for(n, options.concurrency, [&](std::size_t k) {
    GeneratorRequest req;
    req.template_id = options.template_id;
    req.notam = views[k];
    req.knowledge = knowledge;
    req.decode = options.decode;
    req.timeout = options.timeout;
    req.input_id = input_id.empty() ? notam.id : input_id;
    req.variant_index = k;
    try {
      res.outputs[k] = canonical_serialize(backend.generate(req).records);
    } catch (const GatewayError& e) {
      failures[k] = "view " + std::to_string(k) + ": " + e.what();
    }
  });

  std::vector<std::string> surviving;
  for (std::size_t k = 0; k < n; ++k) {
    if (res.outputs[k]) surviving.push_back(*res.outputs[k]);
    else res.failures.push_back(failures[k]);
  }
  if (surviving.size() < (n + 1) / 2) throw MultiviewDegraded(surviving.size(), n);
  const std::string winner = vote(surviving);
  res.winning_votes = static_cast<std::size_t>(std::count(surviving.begin(), surviving.end(), winner));
  res.records = parse_record_list(winner);
  return res;
}

std::vector<PolicyInput> RewriteVariantSource::variants(const TrainingRow& row, std::size_t count,
                                                        std::uint64_t seed) const {
  std::vector<PolicyInput> out;
  if (!row.notam || count == 0) return out;
  const auto table = row.notam->location ? rules_.with_protected({*row.notam->location}) : rules_;
  std::set<std::string> seen{row.input.text};
  const std::size_t attempts = std::size_t{1} << rules_.transforms.size();
  for (std::size_t k = 1; k <= attempts && out.size() < count; ++k) {
    const auto r = rewrite(row.notam->body, k, seed, table);
    if (r.noop) continue;
    Notam v = *row.notam;
    v.body = r.text;
    PolicyInput in = row.input;
    in.text = serialize_notam(v);
    if (!seen.insert(in.text).second) continue;
    out.push_back(std::move(in));
  }
  return out;
}

}  // namespace notamkit
