#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <sstream>

#include "covmap/measurements.hpp"

using namespace covmap;

namespace {

Dataset ingest(const std::string& body) {
  std::istringstream in("timestamp,lat,lon,cell_id,signal_dbm,tech\n" + body);
  return parse_csv(in, "inline");
}

Timestamp at(const char* iso) { return *parse_timestamp(iso); }

}  // namespace

TEST(ParseCsv, OutOfRangeLatitudeIsRejected) {
  const auto ds = ingest("2024-01-15T10:30:00Z,91.0,0.5,c1,-80,4G\n2024-01-15T10:31:00Z,45.0,0.5,c1,-80,4G\n");
  EXPECT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.provenance.rejected_coordinates, 1u);
  EXPECT_EQ(ds.provenance.accepted, 1u);
}

TEST(ParseCsv, DuplicatesAfterRoundingCollapse) {
  // Both rows round to (0.12346, 51.12346) at 5 decimals.
  const auto ds = ingest(
      "2024-01-15T10:30:00Z,51.123456,0.123456,c1,-80,4G\n"
      "2024-01-15T10:30:00Z,51.123459,0.123464,c1,-81,4G\n");
  EXPECT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.provenance.deduped, 1u);
  EXPECT_DOUBLE_EQ(*ds.records[0].signal_dbm, -80.0);
}

TEST(ParseCsv, DifferentRoundedCoordinatesAreKept) {
  const auto ds = ingest(
      "2024-01-15T10:30:00Z,51.12345,0.12345,c1,-80,4G\n"
      "2024-01-15T10:30:00Z,51.12345,0.12347,c1,-80,4G\n");
  EXPECT_EQ(ds.size(), 2u);
}

TEST(ParseCsv, EmptySignalIsNoService) {
  const auto ds = ingest("2024-01-15T10:30:00Z,51.0,0.1,c1,,4G\n");
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_TRUE(ds.records[0].no_service());
  EXPECT_EQ(ds.records[0].tech, "4G");
}

TEST(ParseCsv, OutlierSignalIsRejected) {
  const auto ds = ingest("2024-01-15T10:30:00Z,51.0,0.1,c1,-151,4G\n2024-01-15T10:30:01Z,51.0,0.1,c1,-19.5,4G\n");
  EXPECT_EQ(ds.size(), 0u);
  EXPECT_EQ(ds.provenance.rejected_outliers, 2u);
}

TEST(ParseCsv, BadTimestampIsRowErrorWithLineNumber) {
  const auto ds = ingest("2024-01-15T10:30:00Z,51.0,0.1,c1,-80,4G\nyesterday,51.0,0.1,c1,-80,4G\n");
  EXPECT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.provenance.row_errors, 1u);
  ASSERT_EQ(ds.provenance.errors.size(), 1u);
  EXPECT_EQ(ds.provenance.errors[0].line, 3u);
}

TEST(ParseCsv, MissingRequiredColumnThrows) {
  std::istringstream in("timestamp,lat,lon,signal_dbm\n2024-01-15T10:30:00Z,51,0,-80\n");
  EXPECT_THROW(parse_csv(in, "inline"), IngestError);
}

TEST(ParseCsv, RecordsAreSortedByTime) {
  const auto ds = ingest(
      "2024-02-10T00:00:00Z,51.0,0.1,c1,-80,4G\n"
      "2024-01-15T00:00:00Z,51.0,0.2,c1,-80,4G\n"
      "2024-01-20T00:00:00Z,51.0,0.3,c1,-80,4G\n");
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_TRUE(std::is_sorted(ds.records.begin(), ds.records.end(),
                             [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; }));
}

TEST(ParseCsv, Deterministic) {
  const std::string body =
      "2024-01-15T10:30:00Z,91.0,0.5,c1,-80,4G\n"
      "2024-01-15T10:30:00Z,51.123456,0.123456,c1,-80,4G\n"
      "2024-01-15T10:30:00Z,51.123459,0.123464,c1,-81,4G\n"
      "2024-01-16T10:30:00Z,51.2,0.2,c2,,3G\n";
  const auto a = ingest(body), b = ingest(body);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.records[i].timestamp, b.records[i].timestamp);
    EXPECT_EQ(a.records[i].lon, b.records[i].lon);
    EXPECT_EQ(a.records[i].signal_dbm, b.records[i].signal_dbm);
  }
  EXPECT_EQ(a.provenance.rejected(), b.provenance.rejected());
  EXPECT_EQ(a.provenance.deduped, b.provenance.deduped);
}

TEST(ParseCsv, WriteThenParseRoundTrips) {
  const auto ds = ingest(
      "2024-01-15T10:30:00Z,51.1234567,-0.1234567,c1,-80.5,4G\n"
      "2024-01-16T10:30:00Z,51.2,0.2,\"c,2\",,3G\n");
  std::stringstream io;
  write_csv(io, ds.records);
  const auto back = parse_csv(io, "roundtrip");
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(back.records[i].cell_id, ds.records[i].cell_id);
    EXPECT_EQ(back.records[i].lat, ds.records[i].lat);
    EXPECT_EQ(back.records[i].signal_dbm, ds.records[i].signal_dbm);
  }
}

TEST(Timestamp, ParseAndFormat) {
  const auto t = parse_timestamp("2024-01-15T10:30:00Z");
  ASSERT_TRUE(t);
  EXPECT_EQ(format_timestamp(*t), "2024-01-15T10:30:00Z");
  EXPECT_FALSE(parse_timestamp("2024-13-15T10:30:00Z"));
  EXPECT_FALSE(parse_timestamp("not a time"));
}

TEST(BandOf, TableExamples) {
  EXPECT_EQ(band_of(-110).ordinal, 1);
  EXPECT_EQ(band_of(-100).ordinal, 2);
  EXPECT_EQ(band_of(-95).ordinal, 3);
  EXPECT_EQ(band_of(-74).ordinal, 5);
  EXPECT_EQ(band_of(-105).ordinal, 2);
  EXPECT_EQ(band_of(-82).ordinal, 4);
  EXPECT_EQ(band_of(-74.0001).ordinal, 4);
}

TEST(BandOf, TotalAndPiecewiseConstant) {
  for (double v = -150.0; v <= -20.0; v += 0.05) {
    const auto& b = band_of(v);
    EXPECT_LE(b.lower_dbm, v);
    EXPECT_LT(v, b.upper_dbm);
    int containing = 0;
    for (const auto& other : all_bands()) containing += other.contains(v);
    EXPECT_EQ(containing, 1) << v;
  }
  EXPECT_EQ(all_bands().front().lower_dbm, -std::numeric_limits<double>::infinity());
  EXPECT_EQ(all_bands().back().upper_dbm, std::numeric_limits<double>::infinity());
}

TEST(BandOf, CategoryLabels) {
  EXPECT_EQ(band_category(5), "5. Good in-home and outdoor");
  EXPECT_EQ(band_category(1), "1. Poor to none (outdoor only)");
}

TEST(Partition, ThreeRecordsOneCell) {
  const auto ds = ingest(
      "2024-01-15T10:30:00Z,51.0,0.1,c1,-100,4G\n"
      "2024-01-15T10:31:00Z,51.0,0.2,c1,-101,4G\n"
      "2024-01-15T10:32:00Z,51.0,0.3,c1,-70,4G\n");
  const auto p = partition(ds, 20);
  ASSERT_EQ(p.bands.size(), 2u);
  EXPECT_EQ(p.find("c1", 2)->points.size(), 2u);
  EXPECT_EQ(p.find("c1", 5)->points.size(), 1u);
  EXPECT_FALSE(p.find("c1", 2)->trainable);
}

TEST(Partition, AllNoService) {
  const auto ds = ingest(
      "2024-01-15T10:30:00Z,51.0,0.1,c1,,4G\n"
      "2024-01-15T10:31:00Z,51.0,0.2,c1,,4G\n"
      "2024-01-15T10:32:00Z,51.0,0.3,c1,,4G\n");
  const auto p = partition(ds);
  EXPECT_TRUE(p.bands.empty());
  EXPECT_EQ(p.negatives_of("c1").size(), 3u);
}

TEST(Partition, MixedTwoCellFixture) {
  // Hand-enumerated: a -> band1 x2, band3 x1, no-service x1; b -> band4 x1, band5 x2; global no-service x1.
  const auto ds = ingest(
      "2024-01-01T00:00:01Z,51.0,0.01,a,-110,4G\n"
      "2024-01-01T00:00:02Z,51.0,0.02,a,-106,4G\n"
      "2024-01-01T00:00:03Z,51.0,0.03,a,-90,4G\n"
      "2024-01-01T00:00:04Z,51.0,0.04,a,,4G\n"
      "2024-01-01T00:00:05Z,51.0,0.05,b,-80,4G\n"
      "2024-01-01T00:00:06Z,51.0,0.06,b,-74,4G\n"
      "2024-01-01T00:00:07Z,51.0,0.07,b,-60,4G\n"
      "2024-01-01T00:00:08Z,51.0,0.08,,,4G\n");
  const auto p = partition(ds, 2);
  ASSERT_EQ(p.bands.size(), 4u);
  EXPECT_EQ(p.find("a", 1)->points.size(), 2u);
  EXPECT_TRUE(p.find("a", 1)->trainable);
  EXPECT_EQ(p.find("a", 3)->points.size(), 1u);
  EXPECT_FALSE(p.find("a", 3)->trainable);
  EXPECT_EQ(p.find("b", 4)->points.size(), 1u);
  EXPECT_EQ(p.find("b", 5)->points.size(), 2u);
  EXPECT_EQ(p.negatives_of("a").size(), 1u);
  EXPECT_EQ(p.negatives_of("b").size(), 0u);
  EXPECT_EQ(p.global_negatives.size(), 1u);
  EXPECT_EQ(p.cells(), (std::vector<std::string>{"a", "b"}));
}

TEST(Partition, CoversAllRecordsExactlyOnce) {
  std::string body;
  for (int i = 0; i < 200; ++i) {
    char line[128];
    const double dbm = -130.0 + 0.47 * i;
    std::snprintf(line, sizeof line, "2024-01-01T00:%02d:%02dZ,51.%04d,0.%04d,c%d,%s,4G\n", i / 60, i % 60, i, i,
                  i % 3, i % 7 == 0 ? "" : std::to_string(dbm).c_str());
    body += line;
  }
  const auto ds = ingest(body);
  const auto p = partition(ds);
  std::size_t total = p.global_negatives.size();
  for (const auto& [_, bp] : p.bands) total += bp.points.size();
  for (const auto& [_, neg] : p.negatives) total += neg.size();
  EXPECT_EQ(total, ds.size());
}

TEST(TemporalSplit, JanFeb) {
  const auto ds = ingest("2024-01-15T00:00:00Z,51.0,0.1,c1,-80,4G\n2024-02-10T00:00:00Z,51.0,0.2,c1,-80,4G\n");
  const auto s = temporal_split(ds, at("2024-02-01T00:00:00Z"));
  ASSERT_EQ(s.train.size(), 1u);
  ASSERT_EQ(s.validation.size(), 1u);
  EXPECT_EQ(format_timestamp(s.train.records[0].timestamp), "2024-01-15T00:00:00Z");
  EXPECT_EQ(format_timestamp(s.validation.records[0].timestamp), "2024-02-10T00:00:00Z");
  EXPECT_TRUE(s.warnings.empty());
}

TEST(TemporalSplit, BeforeAllRecordsGivesEmptyTrainWithWarning) {
  const auto ds = ingest("2024-01-15T00:00:00Z,51.0,0.1,c1,-80,4G\n");
  const auto s = temporal_split(ds, at("2023-01-01T00:00:00Z"));
  EXPECT_TRUE(s.train.empty());
  EXPECT_EQ(s.validation.size(), 1u);
  EXPECT_EQ(s.warnings.size(), 1u);
}

TEST(TemporalSplit, TenRecordFixture) {
  std::string body;
  for (int d = 1; d <= 10; ++d) body += "2024-01-" + std::string(d < 10 ? "0" : "") + std::to_string(d) +
                                        "T12:00:00Z,51.0,0." + std::to_string(d) + ",c1,-80,4G\n";
  const auto ds = ingest(body);
  // Split at the instant of the 4th record: records 1..3 train, 4..10 validate.
  const auto s = temporal_split(ds, at("2024-01-04T12:00:00Z"));
  EXPECT_EQ(s.train.size(), 3u);
  EXPECT_EQ(s.validation.size(), 7u);
  std::vector<MeasurementRecord> joined = s.train.records;
  joined.insert(joined.end(), s.validation.records.begin(), s.validation.records.end());
  ASSERT_EQ(joined.size(), ds.size());
  for (std::size_t i = 0; i < joined.size(); ++i) {
    EXPECT_EQ(joined[i].timestamp, ds.records[i].timestamp);
    EXPECT_EQ(joined[i].lon, ds.records[i].lon);
  }
}
