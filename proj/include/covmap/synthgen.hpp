#pragma once

// Seeded synthetic measurement sets with known coverage geometry (disk,
// annulus, crescent, multiple blobs). Band regions are nested: stronger
// bands occupy the inner part of the shape in radial terms.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "covmap/geometry.hpp"
#include "covmap/measurements.hpp"

namespace covmap {

enum class Shape { disk, annulus, crescent, multi_blob };

inline std::string_view to_string(Shape s) {
  switch (s) {
    case Shape::disk: return "disk";
    case Shape::annulus: return "annulus";
    case Shape::crescent: return "crescent";
    case Shape::multi_blob: return "multi_blob";
  }
  return "?";
}

inline Shape parse_shape(std::string_view s) {
  if (s == "disk") return Shape::disk;
  if (s == "annulus") return Shape::annulus;
  if (s == "crescent") return Shape::crescent;
  if (s == "multi_blob" || s == "multi-blob") return Shape::multi_blob;
  throw std::invalid_argument("unknown shape '" + std::string(s) + "'");
}

struct Scenario {
  Shape shape = Shape::disk;
  std::string cell_id = "cell-0";
  double center_lon = -1.5;
  double center_lat = 52.5;

  // Disk and crescent use r_out as the outer radius; annulus uses both.
  double r_in = 0.01;
  double r_out = 0.03;
  // Crescent: the outer disk minus a disk of bite_radius shifted east by bite_offset.
  double bite_offset = 0.025;
  double bite_radius = 0.015;
  // Multi-blob: `blobs` disks of blob_radius evenly spaced on a circle of blob_spread.
  int blobs = 3;
  double blob_radius = 0.01;
  double blob_spread = 0.025;

  std::size_t n_service = 2000;
  std::size_t n_noservice = 400;
  // Upper radial fraction of bands 5, 4, 3, 2, 1 (strongest first); the last is 1.
  std::array<double, kBandCount> band_profile = {0.2, 0.4, 0.6, 0.8, 1.0};
  Timestamp t_start = std::chrono::sys_days{std::chrono::year{2024} / 1 / 1};
  Timestamp t_end = std::chrono::sys_days{std::chrono::year{2024} / 3 / 1};
  std::uint64_t seed = 1;
  double gps_noise_sigma = 1e-4;
  // Share of no-service samples placed in holes, when the shape has any.
  double hole_fraction = 0.7;
  // Exterior no-service ring spans [R, (1 + exterior_width) R] of the outer radius R.
  double exterior_width = 0.3;

  void validate() const {
    if (!(r_out > 0.0)) throw std::invalid_argument("r_out must be > 0");
    if (shape == Shape::annulus && !(r_in > 0.0 && r_in < r_out))
      throw std::invalid_argument("annulus needs 0 < r_in < r_out");
    if (shape == Shape::crescent && !(bite_radius > 0.0 && bite_offset >= 0.0 && bite_offset < r_out + bite_radius &&
                                      bite_offset + r_out > bite_radius))
      throw std::invalid_argument("crescent bite must cut the disk without covering it");
    if (shape == Shape::multi_blob && !(blobs >= 1 && blob_radius > 0.0 && blob_spread >= 0.0))
      throw std::invalid_argument("multi_blob needs blobs >= 1 and blob_radius > 0");
    if (n_service == 0 || n_noservice == 0) throw std::invalid_argument("n_service and n_noservice must be > 0");
    for (std::size_t i = 0; i < band_profile.size(); ++i)
      if (!(band_profile[i] > (i ? band_profile[i - 1] : 0.0)))
        throw std::invalid_argument("band_profile must be strictly increasing and positive");
    if (band_profile.back() != 1.0) throw std::invalid_argument("band_profile must end at 1");
    if (!(t_end > t_start)) throw std::invalid_argument("timestamp range is empty");
    if (!(gps_noise_sigma >= 0.0)) throw std::invalid_argument("gps_noise_sigma must be >= 0");
    if (!(hole_fraction >= 0.0 && hole_fraction <= 1.0)) throw std::invalid_argument("hole_fraction outside [0, 1]");
    if (!(exterior_width > 0.0)) throw std::invalid_argument("exterior_width must be > 0");
  }

  /// Radius of the smallest centred disk containing the shape.
  double outer_radius() const {
    return shape == Shape::multi_blob ? blob_spread + blob_radius : r_out;
  }

  PlanarPoint blob_center(int k) const {
    const double a = 2.0 * std::numbers::pi * k / blobs;
    return {center_lon + blob_spread * std::cos(a), center_lat + blob_spread * std::sin(a)};
  }
};

// Counter-based generator: the k-th draw is splitmix64(seed, k).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ull * ++counter_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t below(std::uint64_t n) { return next() % n; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

namespace detail {

inline double dist(const PlanarPoint& a, double x, double y) { return std::hypot(a.x - x, a.y - y); }

// Radial fraction in [0, 1] for a point inside the shape.
inline double radial_fraction(const Scenario& s, const PlanarPoint& p) {
  const double r = dist(p, s.center_lon, s.center_lat);
  switch (s.shape) {
    case Shape::disk:
    case Shape::crescent:
      return r / s.r_out;
    case Shape::annulus:
      return (r - s.r_in) / (s.r_out - s.r_in);
    case Shape::multi_blob: {
      double best = std::numeric_limits<double>::infinity();
      for (int k = 0; k < s.blobs; ++k) {
        const auto c = s.blob_center(k);
        best = std::min(best, dist(p, c.x, c.y));
      }
      return best / s.blob_radius;
    }
  }
  return 1.0;
}

inline bool in_shape(const Scenario& s, const PlanarPoint& p) {
  const double r = dist(p, s.center_lon, s.center_lat);
  switch (s.shape) {
    case Shape::disk:
      return r <= s.r_out;
    case Shape::annulus:
      return r >= s.r_in && r <= s.r_out;
    case Shape::crescent:
      return r <= s.r_out && dist(p, s.center_lon + s.bite_offset, s.center_lat) > s.bite_radius;
    case Shape::multi_blob:
      for (int k = 0; k < s.blobs; ++k) {
        const auto c = s.blob_center(k);
        if (dist(p, c.x, c.y) <= s.blob_radius) return true;
      }
      return false;
  }
  return false;
}

// Coverage holes enclosed by the shape's outer extent.
inline bool in_hole(const Scenario& s, const PlanarPoint& p) {
  const double r = dist(p, s.center_lon, s.center_lat);
  switch (s.shape) {
    case Shape::disk:
      return false;
    case Shape::annulus:
      return r < s.r_in;
    case Shape::crescent:
      return r <= s.r_out && !in_shape(s, p);
    case Shape::multi_blob:
      return r <= s.outer_radius() && !in_shape(s, p);
  }
  return false;
}

inline bool has_holes(const Scenario& s) { return s.shape != Shape::disk; }

inline PlanarPoint sample_box(CounterRng& rng, const Scenario& s, double radius) {
  return {rng.uniform(s.center_lon - radius, s.center_lon + radius),
          rng.uniform(s.center_lat - radius, s.center_lat + radius)};
}

inline double round_to(double v, double unit) { return std::round(v / unit) * unit; }

}  // namespace detail

/// Strongest band at a point inside the shape.
inline int true_band(const Scenario& s, const PlanarPoint& p) {
  const double q = detail::radial_fraction(s, p);
  for (int i = 0; i < kBandCount; ++i)
    if (q < s.band_profile[static_cast<std::size_t>(i)]) return kBandCount - i;
  return 1;
}

/// Exact membership of `p` (lon/lat) in the region where `band` or a stronger
/// band is observed.
inline bool oracle_covered(const Scenario& s, const PlanarPoint& p, int band) {
  return detail::in_shape(s, p) && true_band(s, p) >= band;
}

struct SyntheticData {
  Dataset dataset;
  // Noise-free location of each record, aligned with dataset.records.
  std::vector<PlanarPoint> true_locations;
};

inline SyntheticData generate(const Scenario& s) {
  s.validate();
  CounterRng rng(s.seed);
  struct Draft {
    MeasurementRecord rec;
    PlanarPoint truth;
  };
  std::vector<Draft> drafts;
  drafts.reserve(s.n_service + s.n_noservice);
  const auto span_s = (s.t_end - s.t_start).count();
  const double R = s.outer_radius();

  auto finish = [&](PlanarPoint truth, std::optional<double> dbm) {
    Draft d;
    d.truth = truth;
    d.rec.timestamp = s.t_start + std::chrono::seconds{static_cast<long long>(rng.below(static_cast<std::uint64_t>(span_s)))};
    d.rec.lon = detail::round_to(truth.x + s.gps_noise_sigma * rng.normal(), 1e-7);
    d.rec.lat = detail::round_to(truth.y + s.gps_noise_sigma * rng.normal(), 1e-7);
    d.rec.cell_id = s.cell_id;
    d.rec.signal_dbm = dbm;
    d.rec.tech = "4G";
    drafts.push_back(std::move(d));
  };

  for (std::size_t i = 0; i < s.n_service; ++i) {
    PlanarPoint p;
    do p = detail::sample_box(rng, s, R);
    while (!detail::in_shape(s, p));
    const int band = true_band(s, p);
    const auto& b = band_by_ordinal(band);
    // Whole tenths of a dBm inside the band so the CSV text re-ingests exactly.
    const long lo = std::lround((std::isfinite(b.lower_dbm) ? b.lower_dbm : -120.0) * 10.0);
    const long hi = std::lround((std::isfinite(b.upper_dbm) ? b.upper_dbm : -60.0) * 10.0);
    const long tenths = lo + static_cast<long>(rng.below(static_cast<std::uint64_t>(hi - lo)));
    finish(p, static_cast<double>(tenths) / 10.0);
  }

  const std::size_t n_hole =
      detail::has_holes(s) ? static_cast<std::size_t>(std::llround(s.hole_fraction * static_cast<double>(s.n_noservice)))
                           : 0;
  for (std::size_t i = 0; i < s.n_noservice; ++i) {
    PlanarPoint p;
    if (i < n_hole) {
      do p = detail::sample_box(rng, s, R);
      while (!detail::in_hole(s, p));
    } else {
      const double outer = R * (1.0 + s.exterior_width);
      double r = 0.0;
      do {
        p = detail::sample_box(rng, s, outer);
        r = detail::dist(p, s.center_lon, s.center_lat);
      } while (r < R || r > outer);
    }
    finish(p, std::nullopt);
  }

  std::stable_sort(drafts.begin(), drafts.end(),
                   [](const Draft& a, const Draft& b) { return a.rec.timestamp < b.rec.timestamp; });
  SyntheticData out;
  out.dataset.provenance.source = "synthetic:" + std::string(to_string(s.shape)) + ":seed=" + std::to_string(s.seed);
  for (auto& d : drafts) {
    out.dataset.records.push_back(std::move(d.rec));
    out.true_locations.push_back(d.truth);
  }
  out.dataset.provenance.rows_read = out.dataset.provenance.accepted = out.dataset.records.size();
  return out;
}

/// Concatenation of several scenarios, re-sorted by time.
inline Dataset generate_suite(std::span<const Scenario> scenarios) {
  Dataset ds;
  ds.provenance.source = "synthetic-suite";
  for (const auto& s : scenarios) {
    auto part = generate(s).dataset;
    ds.records.insert(ds.records.end(), part.records.begin(), part.records.end());
  }
  sort_by_time(ds.records);
  ds.provenance.rows_read = ds.provenance.accepted = ds.records.size();
  return ds;
}

/// Scenario parameters as key=value lines.
inline void write_sidecar(std::ostream& os, const Scenario& s) {
  char buf[64];
  auto num = [&](double v) {
    for (int prec = 1; prec <= 17; ++prec) {
      std::snprintf(buf, sizeof buf, "%.*g", prec, v);
      if (std::strtod(buf, nullptr) == v) break;
    }
    return std::string(buf);
  };
  os << "shape=" << to_string(s.shape) << '\n'
     << "cell_id=" << s.cell_id << '\n'
     << "center_lon=" << num(s.center_lon) << '\n'
     << "center_lat=" << num(s.center_lat) << '\n'
     << "r_in=" << num(s.r_in) << '\n'
     << "r_out=" << num(s.r_out) << '\n'
     << "bite_offset=" << num(s.bite_offset) << '\n'
     << "bite_radius=" << num(s.bite_radius) << '\n'
     << "blobs=" << s.blobs << '\n'
     << "blob_radius=" << num(s.blob_radius) << '\n'
     << "blob_spread=" << num(s.blob_spread) << '\n'
     << "n_service=" << s.n_service << '\n'
     << "n_noservice=" << s.n_noservice << '\n'
     << "band_profile=";
  for (std::size_t i = 0; i < s.band_profile.size(); ++i) os << (i ? "," : "") << num(s.band_profile[i]);
  os << '\n'
     << "t_start=" << format_timestamp(s.t_start) << '\n'
     << "t_end=" << format_timestamp(s.t_end) << '\n'
     << "seed=" << s.seed << '\n'
     << "gps_noise_sigma=" << num(s.gps_noise_sigma) << '\n'
     << "hole_fraction=" << num(s.hole_fraction) << '\n'
     << "exterior_width=" << num(s.exterior_width) << '\n';
}

}  // namespace covmap
