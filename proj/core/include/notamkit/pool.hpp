#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace notamkit {

/// One generated response. candidate is empty when the generator failed
/// (timeout, remote error, no extractable records); such entries count as
/// incorrect.
struct PoolEntry {
  std::string input_id;
  int iteration = 0;
  int phase = 0;  // 1: generation with the current policy, 2: with the SFT policy
  std::optional<std::string> candidate;
  bool is_correct = false;
  std::string failure;

  friend bool operator==(const PoolEntry&, const PoolEntry&) = default;
};

/// Append-only archive of responses with a per-input index. Entries for one
/// input are kept in (iteration, insertion) order.
class ResponsePool {
 public:
  /// Throws Error if the entry's iteration precedes the input's latest one.
  void append(PoolEntry entry);

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<PoolEntry>& entries() const noexcept { return entries_; }
  /// Indices into entries() for one input, oldest first.
  const std::vector<std::size_t>& for_input(const std::string& input_id) const;

 private:
  std::vector<PoolEntry> entries_;
  std::map<std::string, std::vector<std::size_t>> index_;
};

std::string pool_entry_to_json(const PoolEntry& entry);
PoolEntry pool_entry_from_json(std::string_view line);

/// Appends entries, one JSON object per line, and flushes.
void append_pool_file(const std::filesystem::path& path, const std::vector<PoolEntry>& entries);

/// Replays a pool file. A trailing line without its newline is an
/// interrupted write: it is dropped and the file truncated to the last
/// complete line. Missing file yields an empty pool.
ResponsePool replay_pool_file(const std::filesystem::path& path);

}  // namespace notamkit
