#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace notamkit::testing {

inline std::filesystem::path data_path(const std::string& rel) { return std::filesystem::path(NOTAMKIT_DATA_DIR) / rel; }

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline constexpr const char* kKdenAppendix =
    "Q)KZDV/QMRLC/IV/NBO/A/000/999/\n3952N10440W005\nA)KDEN B)2301010254 C)2301011200\nE) DEN RWY 17L/35R CLSD\n";

inline constexpr const char* kAggcCase =
    "Q)AGGG/QFALC/IV/NBO/A/000/999/0742S15700E005\nA)AGGC B)2501010000 C)2501021200\n"
    "E) CHOISEUL L BAY AIRPORT CLOSED TO ALL OPERATIONS\n";

/// The two records of the appendix worked example.
inline constexpr const char* kKdenAppendixOutput =
    R"([{"airport":"KDEN","runway":"17L","affect_actype":null,"affect_region":"TAKEOFFS,LANDINGS",)"
    R"("flight_type":"International,Domestic,Regional"},)"
    R"({"airport":"KDEN","runway":"35R","affect_actype":null,"affect_region":"TAKEOFFS,LANDINGS",)"
    R"("flight_type":"International,Domestic,Regional"}])";

}  // namespace notamkit::testing
