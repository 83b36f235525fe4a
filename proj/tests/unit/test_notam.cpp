#include <gtest/gtest.h>

#include "notamkit/error.hpp"
#include "notamkit/notam.hpp"
#include "notamkit/qcode.hpp"
#include "notamkit/record.hpp"
#include "support.hpp"

using namespace notamkit;
using notamkit::testing::data_path;
using notamkit::testing::kAggcCase;
using notamkit::testing::kKdenAppendix;
using notamkit::testing::kKdenAppendixOutput;
using notamkit::testing::read_text;

namespace {

std::vector<std::string> fixture_blocks() {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(read_text(data_path("fixtures/notams.txt")));
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (line[0] != '#') {
      cur += line + "\n";
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

TEST(ParseNotam, AppendixExample) {
  const Notam n = parse_notam(kKdenAppendix, "kden");
  ASSERT_TRUE(n.q_line);
  EXPECT_EQ(n.q_line->qcode, "QMRLC");
  EXPECT_EQ(n.q_line->fir, "KZDV");
  EXPECT_EQ(n.q_line->coordinates_radius, "3952N10440W005");
  EXPECT_EQ(n.location, "KDEN");
  EXPECT_EQ(n.valid_from, "2301010254");
  EXPECT_EQ(n.valid_to, "2301011200");
  EXPECT_EQ(n.body, "DEN RWY 17L/35R CLSD");
  EXPECT_EQ(n.id, "kden");
}

TEST(ParseNotam, CaseStudyBodyKeptVerbatim) {
  const Notam n = parse_notam(kAggcCase);
  EXPECT_EQ(n.location, "AGGC");
  EXPECT_EQ(n.body, "CHOISEUL L BAY AIRPORT CLOSED TO ALL OPERATIONS");
}

TEST(ParseNotam, MissingEField) {
  EXPECT_THROW(parse_notam("A)KDEN B)2301010254 C)2301011200"), MissingEField);
}

TEST(ParseNotam, SpacedLabels) {
  const Notam n = parse_notam("A ) KDEN B ) 2301010254 C ) PERM E ) RWY 08 CLSD");
  EXPECT_EQ(n.location, "KDEN");
  EXPECT_EQ(n.valid_to, "PERM");
  EXPECT_EQ(n.body, "RWY 08 CLSD");
}

TEST(ParseNotam, MalformedFieldsNameTheLabel) {
  try {
    parse_notam("A)KDE1 E) RWY 08 CLSD");
    FAIL();
  } catch (const MalformedField& e) {
    EXPECT_EQ(e.label(), "A");
  }
  try {
    parse_notam("A)KDEN B)2301019999 E) RWY 08 CLSD");
    FAIL();
  } catch (const MalformedField& e) {
    EXPECT_EQ(e.label(), "B");
  }
  EXPECT_THROW(parse_notam("A)KDEN B)2302010000 C)2301010000 E) RWY 08 CLSD"), MalformedField);
  EXPECT_THROW(parse_notam("Q)KZDV/QMRL/IV/NBO/A/000/999/\nA)KDEN E) X"), MalformedField);
  EXPECT_THROW(parse_notam("Q)KZDV/QMRLC/IV/NBO/A/300/100/\nA)KDEN E) X"), MalformedField);
}

TEST(ParseNotam, BodyStopsAtLaterLabels) {
  const Notam n = parse_notam("A)ZBAA E) AIRSPACE RESERVED F)SFC G)FL120");
  EXPECT_EQ(n.body, "AIRSPACE RESERVED");
  EXPECT_EQ(n.lower_vertical, "SFC");
  EXPECT_EQ(n.upper_vertical, "FL120");
}

TEST(ParseNotam, SerializeRoundTripsFixtureCorpus) {
  const auto blocks = fixture_blocks();
  ASSERT_EQ(blocks.size(), 10u);
  for (const auto& b : blocks) {
    const Notam n = parse_notam(b);
    const Notam again = parse_notam(serialize_notam(n));
    EXPECT_TRUE(n.same_fields(again)) << b;
    EXPECT_FALSE(n.body.empty());
    if (n.location) EXPECT_TRUE(is_icao_code(*n.location));
  }
}

TEST(DecodeQCode, Examples) {
  const auto lc = decode_qcode("QMRLC");
  EXPECT_EQ(lc.subject_letter_pair, "MR");
  EXPECT_EQ(lc.subject_label, "Runway");
  EXPECT_EQ(lc.condition_letter_pair, "LC");
  EXPECT_EQ(lc.condition_label, "Closed");
  EXPECT_EQ(lc.area_letter, "M");
  EXPECT_EQ(lc.area_label, "Movement Area");

  const auto ah = decode_qcode("QMRAH");
  EXPECT_EQ(ah.subject_label, "Runway");
  EXPECT_EQ(ah.condition_label, "Open/Hours");

  const auto zz = decode_qcode("QZZZZ");
  EXPECT_EQ(zz.subject_label, kUnknownLabel);
  EXPECT_EQ(zz.condition_label, kUnknownLabel);
  EXPECT_EQ(zz.area_letter, "Z");
}

TEST(DecodeQCode, RejectsMalformed) {
  EXPECT_THROW(decode_qcode("QMRL"), MalformedQCode);
  EXPECT_THROW(decode_qcode("XMRLC"), MalformedQCode);
  EXPECT_THROW(decode_qcode("Qmrlc"), MalformedQCode);
}

TEST(QCodeLexicon, BuiltinHasVersion) {
  EXPECT_GE(QCodeLexicon::builtin().version(), 1);
  EXPECT_GT(QCodeLexicon::builtin().size(), 10u);
}

TEST(RunwayDesignators, Examples) {
  EXPECT_EQ(expand_runway_designators("17L/35R"), (std::vector<std::string>{"17L", "35R"}));
  EXPECT_EQ(expand_runway_designators("09"), (std::vector<std::string>{"09"}));
  EXPECT_EQ(expand_runway_designators("RWY 07R"), (std::vector<std::string>{"07R"}));
  EXPECT_THROW(expand_runway_designators("TWY A"), NotARunwayToken);
  EXPECT_THROW(expand_runway_designators("45"), NotARunwayToken);
}

TEST(RecordsEqual, PermutationInvariant) {
  const auto a = parse_record_list(kKdenAppendixOutput);
  auto b = a;
  std::reverse(b.begin(), b.end());
  EXPECT_TRUE(records_equal(a, b));
  b[0].runway = b[0].runway == "35R" ? "35L" : b[0].runway;
  b[1].runway = b[1].runway == "35R" ? "35L" : b[1].runway;
  EXPECT_FALSE(records_equal(a, b));
}

TEST(RecordsEqual, NullAndAbsentAgree) {
  const auto with_null = parse_record_list(
      R"([{"airport":"KDEN","runway":"17L","affect_actype":null,"affect_region":"TAKEOFFS,LANDINGS","flight_type":"International"}])");
  const auto absent = parse_record_list(
      R"([{"airport":"KDEN","runway":"17L","affect_region":"TAKEOFFS,LANDINGS","flight_type":"International"}])");
  EXPECT_TRUE(records_equal(with_null, absent));
}

TEST(Records, ValidationAndNormalization) {
  EXPECT_EQ(normalize_runway("rwy  07r"), "RWY 07R");
  StructuredRecord r{"KDEN", "17L", std::nullopt, AffectRegion::TakeoffsLandings, FlightTypes::all(), std::nullopt};
  EXPECT_TRUE(is_valid(r));
  r.runway = "RWY 07R";
  EXPECT_TRUE(is_valid(r));
  r.runway = "TWY A";
  EXPECT_FALSE(is_valid(r));
  r.runway = "";
  EXPECT_TRUE(is_valid(r));
  r.airport = "KDE";
  EXPECT_THROW(validate(r), InvalidRecord);
  r.airport = "KDEN";
  r.flight_type = FlightTypes();
  EXPECT_FALSE(is_valid(r));
  EXPECT_THROW(parse_record_list("[{\"airport\":\"KDEN\"}]"), InvalidRecord);
  EXPECT_THROW(parse_record_list("not json"), InvalidRecord);
}

TEST(Records, CanonicalSerializationIsStable) {
  const auto a = parse_record_list(kKdenAppendixOutput);
  const std::string s = canonical_serialize(a);
  EXPECT_EQ(canonical_serialize(parse_record_list(s)), s);
  EXPECT_EQ(s.find(": "), std::string::npos);
  EXPECT_EQ(s.find('\n'), std::string::npos);
}

TEST(FlightTypes, FixedOrderThenVerbatim) {
  auto f = FlightTypes::parse("Regional,International,军事");
  EXPECT_EQ(f.to_string(), "International,Regional,军事");
  EXPECT_EQ(FlightTypes::all().to_string(), "International,Domestic,Regional");
}
