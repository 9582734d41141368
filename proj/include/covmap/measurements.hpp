#pragma once

// Crowdsourced measurement ingest: CSV parsing with coordinate validation,
// outlier removal and duplicate-event filtering, dBm banding, per-cell band
// partitions and temporal train/validation splits.

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "covmap/geometry.hpp"

namespace covmap {

using Timestamp = std::chrono::sys_seconds;

/// Parses `YYYY-MM-DDTHH:MM:SSZ` (a trailing `Z` or `+00:00` is accepted,
/// as is a missing suffix). Returns nullopt on anything else.
inline std::optional<Timestamp> parse_timestamp(std::string_view text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char tail[8] = {0};
  const std::string buf(text);
  const int got = std::sscanf(buf.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%7s", &y, &mo, &d, &h, &mi, &s, tail);
  if (got < 6) return std::nullopt;
  if (got == 7 && std::string_view(tail) != "Z" && std::string_view(tail) != "+00:00") return std::nullopt;
  if (buf.size() < 19 || buf[4] != '-' || buf[7] != '-' || buf[10] != 'T') return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60 || h < 0 || mi < 0 || s < 0) return std::nullopt;
  return std::chrono::sys_days{ymd} + std::chrono::hours{h} + std::chrono::minutes{mi} +
         std::chrono::seconds{s};
}

inline std::string format_timestamp(Timestamp t) {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::year_month_day ymd{day};
  const std::chrono::hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

struct MeasurementRecord {
  Timestamp timestamp{};
  double lon = 0.0;
  double lat = 0.0;
  std::string cell_id;
  std::optional<double> signal_dbm;  // empty: no-service sample
  std::optional<std::string> tech;

  bool no_service() const { return !signal_dbm.has_value(); }
  PlanarPoint location() const { return {lon, lat}; }

  friend bool operator==(const MeasurementRecord&, const MeasurementRecord&) = default;
};

// ---------------------------------------------------------------------------
// Signal bands

/// One of the five dBm bands, lower-inclusive and upper-exclusive.
struct SignalBand {
  int ordinal = 1;
  double lower_dbm = -std::numeric_limits<double>::infinity();
  double upper_dbm = std::numeric_limits<double>::infinity();

  bool contains(double dbm) const { return dbm >= lower_dbm && dbm < upper_dbm; }

  friend bool operator==(const SignalBand& a, const SignalBand& b) { return a.ordinal == b.ordinal; }
  friend auto operator<=>(const SignalBand& a, const SignalBand& b) { return a.ordinal <=> b.ordinal; }
};

inline constexpr int kBandCount = 5;
inline constexpr std::array<double, kBandCount - 1> kBandCuts = {-105.0, -95.0, -82.0, -74.0};

inline const std::array<SignalBand, kBandCount>& all_bands() {
  static const std::array<SignalBand, kBandCount> bands = [] {
    std::array<SignalBand, kBandCount> b{};
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kBandCount; ++i) {
      b[i].ordinal = i + 1;
      b[i].lower_dbm = i == 0 ? -inf : kBandCuts[i - 1];
      b[i].upper_dbm = i == kBandCount - 1 ? inf : kBandCuts[i];
    }
    return b;
  }();
  return bands;
}

inline const SignalBand& band_by_ordinal(int ordinal) {
  if (ordinal < 1 || ordinal > kBandCount)
    throw std::out_of_range("band ordinal out of range: " + std::to_string(ordinal));
  return all_bands()[ordinal - 1];
}

inline const SignalBand& band_of(double signal_dbm) {
  int ordinal = 1;
  for (double cut : kBandCuts)
    if (signal_dbm >= cut) ++ordinal;
  return band_by_ordinal(ordinal);
}

inline std::string_view band_category(int ordinal) {
  static constexpr std::array<std::string_view, kBandCount> names = {
      "1. Poor to none (outdoor only)", "2. Variable (outdoor only)", "3. Good (outdoor only)",
      "4. Variable in-home, good outdoor", "5. Good in-home and outdoor"};
  return names.at(static_cast<std::size_t>(ordinal - 1));
}

inline std::string_view band_level_text(int ordinal) {
  static constexpr std::array<std::string_view, kBandCount> levels = {
      "< -105", ">= -105 up to -95", ">= -95 up to -82", ">= -82 up to -74", ">= -74"};
  return levels.at(static_cast<std::size_t>(ordinal - 1));
}

// ---------------------------------------------------------------------------
// Dataset and ingest

struct IngestConfig {
  int dedup_decimals = 5;
  double min_dbm = -150.0;
  double max_dbm = -20.0;
};

struct RowError {
  std::size_t line = 0;
  std::string message;
};

struct Provenance {
  std::string source;
  std::size_t rows_read = 0;
  std::size_t accepted = 0;
  std::size_t rejected_coordinates = 0;
  std::size_t rejected_outliers = 0;
  std::size_t row_errors = 0;
  std::size_t deduped = 0;
  std::vector<RowError> errors;

  std::size_t rejected() const { return rejected_coordinates + rejected_outliers + row_errors; }
};

/// Records sorted by timestamp ascending (stable with respect to file order).
struct Dataset {
  std::vector<MeasurementRecord> records;
  Provenance provenance;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

inline void sort_by_time(std::vector<MeasurementRecord>& records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
}

/// Parses measurement CSV from a stream. Missing required columns throw
/// IngestError; bad rows are counted and the run continues.
inline Dataset parse_csv(std::istream& in, const std::string& source, const IngestConfig& config = {}) {
  Dataset ds;
  ds.provenance.source = source;

  std::string line;
  if (!std::getline(in, line)) throw IngestError(source + ": missing header row");
  const auto header = detail::split_csv_line(line);
  auto column = [&](std::string_view name, bool required) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (detail::trim(header[i]) == name) return i;
    if (required) throw IngestError(source + ": missing required column '" + std::string(name) + "'");
    return std::nullopt;
  };
  const std::size_t c_time = *column("timestamp", true);
  const std::size_t c_lat = *column("lat", true);
  const std::size_t c_lon = *column("lon", true);
  const std::size_t c_cell = *column("cell_id", true);
  const std::size_t c_signal = *column("signal_dbm", true);
  const auto c_tech = column("tech", false);

  const double scale = std::pow(10.0, config.dedup_decimals);
  using DedupKey = std::tuple<std::string, std::int64_t, std::int64_t, std::int64_t>;
  std::set<DedupKey> seen;

  Provenance& prov = ds.provenance;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    ++prov.rows_read;
    const auto fields = detail::split_csv_line(line);
    auto field = [&](std::size_t idx) -> std::string_view {
      return idx < fields.size() ? detail::trim(fields[idx]) : std::string_view{};
    };
    auto row_error = [&](std::string msg) {
      ++prov.row_errors;
      prov.errors.push_back({line_no, std::move(msg)});
    };

    const auto ts = parse_timestamp(field(c_time));
    if (!ts) {
      row_error("unparseable timestamp '" + std::string(field(c_time)) + "'");
      continue;
    }
    const auto lat = detail::parse_double(field(c_lat));
    const auto lon = detail::parse_double(field(c_lon));
    if (!lat || !lon || *lat < -90.0 || *lat > 90.0 || *lon < -180.0 || *lon > 180.0) {
      ++prov.rejected_coordinates;
      continue;
    }
    MeasurementRecord rec;
    rec.timestamp = *ts;
    rec.lat = *lat;
    rec.lon = *lon;
    rec.cell_id = std::string(field(c_cell));
    const auto signal_text = field(c_signal);
    if (!signal_text.empty()) {
      const auto dbm = detail::parse_double(signal_text);
      if (!dbm) {
        row_error("unparseable signal_dbm '" + std::string(signal_text) + "'");
        continue;
      }
      if (*dbm < config.min_dbm || *dbm > config.max_dbm) {
        ++prov.rejected_outliers;
        continue;
      }
      if (rec.cell_id.empty()) {
        row_error("service record without cell_id");
        continue;
      }
      rec.signal_dbm = *dbm;
    }
    if (c_tech && !field(*c_tech).empty()) rec.tech = std::string(field(*c_tech));

    DedupKey key{rec.cell_id, rec.timestamp.time_since_epoch().count(),
                 static_cast<std::int64_t>(std::llround(rec.lon * scale)),
                 static_cast<std::int64_t>(std::llround(rec.lat * scale))};
    if (!seen.insert(std::move(key)).second) {
      ++prov.deduped;
      continue;
    }
    ds.records.push_back(std::move(rec));
  }
  prov.accepted = ds.records.size();
  sort_by_time(ds.records);
  return ds;
}

inline Dataset parse_csv(const std::string& path, const IngestConfig& config = {}) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path);
  return parse_csv(in, path, config);
}

inline void write_ingest_report(std::ostream& os, const Provenance& p) {
  os << "source: " << p.source << '\n'
     << "rows_read: " << p.rows_read << '\n'
     << "accepted: " << p.accepted << '\n'
     << "rejected_coordinates: " << p.rejected_coordinates << '\n'
     << "rejected_outliers: " << p.rejected_outliers << '\n'
     << "row_errors: " << p.row_errors << '\n'
     << "deduped: " << p.deduped << '\n';
  for (const auto& e : p.errors) os << "  line " << e.line << ": " << e.message << '\n';
}

/// Writes records in the canonical input layout; the output re-ingests to the
/// same records.
inline void write_csv(std::ostream& os, std::span<const MeasurementRecord> records) {
  auto field = [](const std::string& v) {
    if (v.find_first_of(",\"\n") == std::string::npos) return v;
    std::string q = "\"";
    for (char c : v) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + '"';
  };
  os << "timestamp,lat,lon,cell_id,signal_dbm,tech\n";
  char buf[64];
  for (const auto& r : records) {
    os << format_timestamp(r.timestamp) << ',';
    std::snprintf(buf, sizeof buf, "%.7f,%.7f,", r.lat, r.lon);
    os << buf << field(r.cell_id) << ',';
    if (r.signal_dbm) {
      std::snprintf(buf, sizeof buf, "%.1f", *r.signal_dbm);
      os << buf;
    }
    os << ',' << field(r.tech.value_or("")) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Partitions

struct PartitionKey {
  std::string cell_id;
  int band = 1;

  friend auto operator<=>(const PartitionKey&, const PartitionKey&) = default;
  friend bool operator==(const PartitionKey&, const PartitionKey&) = default;
};

struct BandPartition {
  std::vector<PlanarPoint> points;  // lon/lat
  bool trainable = false;
};

struct Partitions {
  std::map<PartitionKey, BandPartition> bands;
  std::map<std::string, std::vector<PlanarPoint>> negatives;  // per-cell no-service pool
  std::vector<PlanarPoint> global_negatives;                  // no-service without cell_id
  std::size_t min_points = 20;

  std::vector<std::string> cells() const {
    std::set<std::string> ids;
    for (const auto& [key, _] : bands) ids.insert(key.cell_id);
    for (const auto& [cell, _] : negatives) ids.insert(cell);
    return {ids.begin(), ids.end()};
  }

  const BandPartition* find(const std::string& cell, int band) const {
    const auto it = bands.find({cell, band});
    return it == bands.end() ? nullptr : &it->second;
  }

  std::span<const PlanarPoint> negatives_of(const std::string& cell) const {
    const auto it = negatives.find(cell);
    return it == negatives.end() ? std::span<const PlanarPoint>{} : std::span<const PlanarPoint>(it->second);
  }
};

inline constexpr std::size_t kDefaultMinPoints = 20;

inline Partitions partition(const Dataset& dataset, std::size_t min_points = kDefaultMinPoints) {
  Partitions parts;
  parts.min_points = min_points;
  for (const auto& r : dataset.records) {
    if (r.no_service()) {
      if (r.cell_id.empty())
        parts.global_negatives.push_back(r.location());
      else
        parts.negatives[r.cell_id].push_back(r.location());
      continue;
    }
    parts.bands[{r.cell_id, band_of(*r.signal_dbm).ordinal}].points.push_back(r.location());
  }
  for (auto& [_, bp] : parts.bands) bp.trainable = bp.points.size() >= min_points;
  return parts;
}

struct TemporalSplit {
  Dataset train;
  Dataset validation;
  std::vector<std::string> warnings;
};

/// train = records strictly before `split_instant`, validation = the rest.
inline TemporalSplit temporal_split(const Dataset& dataset, Timestamp split_instant) {
  TemporalSplit out;
  out.train.provenance = dataset.provenance;
  out.validation.provenance = dataset.provenance;
  for (const auto& r : dataset.records)
    (r.timestamp < split_instant ? out.train : out.validation).records.push_back(r);
  if (out.train.empty()) out.warnings.push_back("temporal split: empty training side");
  if (out.validation.empty()) out.warnings.push_back("temporal split: empty validation side");
  return out;
}

}  // namespace covmap
