#include "notamkit/pool.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "notamkit/error.hpp"
#include "text_util.hpp"

namespace notamkit {

using nlohmann::json;

void ResponsePool::append(PoolEntry entry) {
  auto& idx = index_[entry.input_id];
  if (!idx.empty() && entries_[idx.back()].iteration > entry.iteration)
    throw Error("pool entry for '" + entry.input_id + "' goes back in iteration order");
  idx.push_back(entries_.size());
  entries_.push_back(std::move(entry));
}

const std::vector<std::size_t>& ResponsePool::for_input(const std::string& input_id) const {
  static const std::vector<std::size_t> none;
  const auto it = index_.find(input_id);
  return it == index_.end() ? none : it->second;
}

std::string pool_entry_to_json(const PoolEntry& e) {
  json j;
  j["input_id"] = e.input_id;
  j["iteration"] = e.iteration;
  j["phase"] = e.phase;
  j["candidate"] = e.candidate ? json(*e.candidate) : json(nullptr);
  j["is_correct"] = e.is_correct;
  if (!e.failure.empty()) j["failure"] = e.failure;
  return j.dump();
}

PoolEntry pool_entry_from_json(std::string_view line) {
  try {
    const json j = json::parse(line);
    PoolEntry e;
    e.input_id = j.at("input_id").get<std::string>();
    e.iteration = j.at("iteration").get<int>();
    e.phase = j.at("phase").get<int>();
    if (!j.at("candidate").is_null()) e.candidate = j.at("candidate").get<std::string>();
    e.is_correct = j.at("is_correct").get<bool>();
    if (j.contains("failure")) e.failure = j.at("failure").get<std::string>();
    return e;
  } catch (const json::exception& ex) {
    throw Error(std::string("bad pool entry: ") + ex.what());
  }
}

void append_pool_file(const std::filesystem::path& path, const std::vector<PoolEntry>& entries) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw FormatError(path.string(), 0, "cannot open pool file for append");
  for (const auto& e : entries) out << pool_entry_to_json(e) << '\n';
  out.flush();
  if (!out) throw FormatError(path.string(), 0, "write failed");
}

ResponsePool replay_pool_file(const std::filesystem::path& path) {
  ResponsePool pool;
  if (!std::filesystem::exists(path)) return pool;
  const std::string text = detail::read_file(path);
  const auto complete = text.rfind('\n');
  const std::size_t keep = complete == std::string::npos ? 0 : complete + 1;
  if (keep != text.size()) std::filesystem::resize_file(path, keep);
  std::size_t line_no = 0;
  for (const auto& line : detail::split_lines(std::string_view(text).substr(0, keep))) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      pool.append(pool_entry_from_json(line));
    } catch (const Error& e) {
      throw FormatError(path.string(), line_no, e.what());
    }
  }
  return pool;
}

}  // namespace notamkit
