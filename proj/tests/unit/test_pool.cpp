#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "notamkit/error.hpp"
#include "notamkit/pool.hpp"

using namespace notamkit;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "notamkit-pool-tests";
  fs::create_directories(dir);
  const auto p = dir / name;
  fs::remove(p);
  return p;
}

}  // namespace

TEST(PoolJson, RoundTrip) {
  const PoolEntry a{"kden", 3, 2, std::string(R"([{"airport":"KDEN"}])"), true, ""};
  const PoolEntry b{"zbaa \"q\"", 1, 1, std::nullopt, false, "generator request timed out"};
  EXPECT_EQ(pool_entry_from_json(pool_entry_to_json(a)), a);
  EXPECT_EQ(pool_entry_from_json(pool_entry_to_json(b)), b);
  EXPECT_EQ(pool_entry_to_json(a).find('\n'), std::string::npos);
}

TEST(PoolFile, AppendAndReplay) {
  const auto path = temp_file("pool.jsonl");
  append_pool_file(path, {{"a", 1, 1, "x", true, ""}, {"b", 1, 1, "y", false, ""}});
  append_pool_file(path, {{"a", 2, 1, std::nullopt, false, "timeout"}});
  const auto pool = replay_pool_file(path);
  ASSERT_EQ(pool.size(), 3u);
  EXPECT_EQ(pool.for_input("a").size(), 2u);
  EXPECT_EQ(pool.entries()[2].failure, "timeout");
  EXPECT_TRUE(replay_pool_file(temp_file("absent.jsonl")).empty());
}

TEST(PoolFile, TruncatedLastLineIsDropped) {
  const auto path = temp_file("torn.jsonl");
  append_pool_file(path, {{"a", 1, 1, "x", true, ""}});
  {
    std::ofstream out(path, std::ios::app);
    out << R"({"input_id":"b","iter)";
  }
  const auto pool = replay_pool_file(path);
  EXPECT_EQ(pool.size(), 1u);
  std::ifstream in(path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(text.back(), '\n');
  EXPECT_EQ(text.find("\"b\""), std::string::npos);
}

TEST(ResponsePool, OutOfOrderAppendRejected) {
  ResponsePool pool;
  pool.append({"a", 2, 1, "x", true, ""});
  EXPECT_THROW(pool.append({"a", 1, 1, "x", true, ""}), Error);
  EXPECT_NO_THROW(pool.append({"b", 1, 1, "x", true, ""}));
  EXPECT_NO_THROW(pool.append({"a", 2, 2, "y", false, ""}));
  EXPECT_TRUE(pool.for_input("missing").empty());
}
