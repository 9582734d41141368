#pragma once

// Per-cell stacks of per-band coverage boundaries (one-class SVM or convex
// hull), highest-band queries, marching-squares contours of the decision
// function, model files and GeoJSON export.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "covmap/geometry.hpp"
#include "covmap/measurements.hpp"
#include "covmap/ocsvm.hpp"

namespace covmap {

enum class Method { ocsvm, hull };
enum class TrainingMode { partition, cumulative };

inline std::string_view to_string(Method m) { return m == Method::ocsvm ? "ocsvm" : "hull"; }
inline std::string_view to_string(TrainingMode m) {
  return m == TrainingMode::partition ? "partition" : "cumulative";
}
inline Method parse_method(std::string_view s) {
  if (s == "ocsvm") return Method::ocsvm;
  if (s == "hull") return Method::hull;
  throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}
inline TrainingMode parse_mode(std::string_view s) {
  if (s == "partition") return TrainingMode::partition;
  if (s == "cumulative") return TrainingMode::cumulative;
  throw std::invalid_argument("unknown training mode '" + std::string(s) + "'");
}

struct BandBoundary {
  int band = 1;
  TrainingMode mode = TrainingMode::partition;
  std::size_t n_points = 0;  // size of the training set this boundary saw
  std::variant<OcSvmModel, Polygon> predictor;

  Method method() const { return std::holds_alternative<OcSvmModel>(predictor) ? Method::ocsvm : Method::hull; }

  /// p in the working frame.
  bool covers(const PlanarPoint& p) const {
    if (const auto* m = std::get_if<OcSvmModel>(&predictor)) return predict(*m, p) == Coverage::covered;
    return point_in_polygon(p, std::get<Polygon>(predictor));
  }
};

struct CoverageModel {
  std::string cell_id;
  TrainingMode mode = TrainingMode::partition;
  CoordinateFrame frame{};
  std::map<int, BandBoundary> boundaries;
};

/// Highest-ordinal band whose boundary covers `p` (working frame), or nullopt
/// when no boundary does.
inline std::optional<int> highest_band_at(const CoverageModel& model, const PlanarPoint& p) {
  for (auto it = model.boundaries.rbegin(); it != model.boundaries.rend(); ++it)
    if (it->second.covers(p)) return it->first;
  return std::nullopt;
}

inline std::optional<int> highest_band_at_lonlat(const CoverageModel& model, double lon, double lat) {
  return highest_band_at(model, model.frame.to_frame(lon, lat));
}

// ---------------------------------------------------------------------------
// Build

/// Lon/lat training points for (cell, band): that band alone in partition
/// mode, that band and every stronger one in cumulative mode.
inline std::vector<PlanarPoint> training_points(const Partitions& parts, const std::string& cell, int band,
                                                TrainingMode mode) {
  std::vector<PlanarPoint> pts;
  const int last = mode == TrainingMode::partition ? band : kBandCount;
  for (int b = band; b <= last; ++b)
    if (const auto* bp = parts.find(cell, b)) pts.insert(pts.end(), bp->points.begin(), bp->points.end());
  return pts;
}

/// Frame for a cell: degrees, or a projection centred on the centroid of the
/// cell's service points.
inline CoordinateFrame cell_frame(const Partitions& parts, const std::string& cell, CoordinateFrame::Mode mode) {
  if (mode == CoordinateFrame::Mode::degrees) return CoordinateFrame::degrees();
  const auto pts = training_points(parts, cell, 1, TrainingMode::cumulative);
  if (pts.empty()) return CoordinateFrame::projected(0.0, 0.0);
  const auto c = centroid(pts);
  return CoordinateFrame::projected(c.x, c.y);
}

inline std::vector<PlanarPoint> to_frame(const CoordinateFrame& frame, std::span<const PlanarPoint> lonlat) {
  std::vector<PlanarPoint> out;
  out.reserve(lonlat.size());
  for (const auto& p : lonlat) out.push_back(frame.to_frame(p));
  return out;
}

struct MethodSpec {
  Method method = Method::ocsvm;
  TrainParams params{};  // ignored for hulls
};

struct BuildSkip {
  int band = 0;
  std::string reason;
};

struct BuildResult {
  CoverageModel model;
  std::vector<BuildSkip> skipped;
};

/// Fits one boundary per band of `cell`. Bands below `parts.min_points` (after
/// cumulative pooling, if any) are skipped, as are bands whose training
/// fails; neither aborts the remaining bands.
inline BuildResult build(const Partitions& parts, const std::string& cell, const MethodSpec& spec, TrainingMode mode,
                         CoordinateFrame::Mode frame_mode = CoordinateFrame::Mode::degrees) {
  BuildResult out;
  out.model.cell_id = cell;
  out.model.mode = mode;
  out.model.frame = cell_frame(parts, cell, frame_mode);
  for (int band = 1; band <= kBandCount; ++band) {
    const auto lonlat = training_points(parts, cell, band, mode);
    if (lonlat.empty()) continue;
    if (lonlat.size() < parts.min_points) {
      out.skipped.push_back({band, "only " + std::to_string(lonlat.size()) + " points (min " +
                                       std::to_string(parts.min_points) + ")"});
      continue;
    }
    const auto pts = to_frame(out.model.frame, lonlat);
    BandBoundary bb;
    bb.band = band;
    bb.mode = mode;
    bb.n_points = pts.size();
    try {
      if (spec.method == Method::ocsvm) {
        auto m = train(pts, spec.params);
        m.band = band;
        m.cell_id = cell;
        m.frame = out.model.frame;
        bb.predictor = std::move(m);
      } else {
        bb.predictor = convex_hull(pts);
      }
    } catch (const std::exception& e) {
      out.skipped.push_back({band, e.what()});
      continue;
    }
    out.model.boundaries.emplace(band, std::move(bb));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Contours

struct ContourResult {
  std::vector<Polygon> rings;  // CCW around covered regions, CW around holes
  std::string diagnostic;      // set when the grid shows a single sign
};

inline constexpr std::size_t kDefaultContourResolution = 256;

namespace detail {

class ContourGrid {
 public:
  ContourGrid(const BoundingBox& box, std::size_t res, const std::function<double(const PlanarPoint&)>& f)
      : box_(box), res_(res), stride_(res + 1), values_(stride_ * stride_) {
    for (std::size_t j = 0; j <= res_; ++j)
      for (std::size_t i = 0; i <= res_; ++i) values_[j * stride_ + i] = f(position(i, j));
  }

  // Indices outside [0, res] form a negative padding ring that closes every
  // contour; padded samples sit on the box edge.
  double value(long i, long j) const {
    if (i < 0 || j < 0 || i > static_cast<long>(res_) || j > static_cast<long>(res_)) return -1.0;
    return values_[static_cast<std::size_t>(j) * stride_ + static_cast<std::size_t>(i)];
  }

  PlanarPoint position(long i, long j) const {
    const long r = static_cast<long>(res_);
    i = std::clamp(i, 0L, r);
    j = std::clamp(j, 0L, r);
    return {box_.min_x + box_.width() * static_cast<double>(i) / static_cast<double>(res_),
            box_.min_y + box_.height() * static_cast<double>(j) / static_cast<double>(res_)};
  }

  const std::vector<double>& values() const { return values_; }
  std::size_t res() const { return res_; }
  const BoundingBox& box() const { return box_; }

 private:
  BoundingBox box_;
  std::size_t res_;
  std::size_t stride_;
  std::vector<double> values_;
};

}  // namespace detail

/// Zero-level contour of `f` over `box` by marching squares on a
/// `resolution` x `resolution` cell grid. Saddles are resolved by the sign at
/// the cell centre. Regions touching the box edge are clipped to it.
template <typename Field>
ContourResult extract_contour_field(Field&& f, const BoundingBox& box, std::size_t resolution) {
  if (resolution < 16) throw std::invalid_argument("contour resolution must be >= 16");
  if (!(box.width() > 0.0 && box.height() > 0.0)) throw std::invalid_argument("contour bbox has zero extent");

  const std::function<double(const PlanarPoint&)> field = f;
  const detail::ContourGrid grid(box, resolution, field);
  const auto& vals = grid.values();
  const bool any_pos = std::any_of(vals.begin(), vals.end(), [](double v) { return v >= 0.0; });
  const bool any_neg = std::any_of(vals.begin(), vals.end(), [](double v) { return v < 0.0; });
  ContourResult out;
  if (!any_pos || !any_neg) {
    out.diagnostic = any_pos ? "decision function non-negative over the whole grid"
                             : "decision function negative over the whole grid";
    return out;
  }

  const long r = static_cast<long>(resolution);
  const long width = r + 3;
  auto edge_id = [&](long i, long j, int vertical) -> std::int64_t {
    return ((j + 1) * width + (i + 1)) * 2 + vertical;
  };
  std::unordered_map<std::int64_t, PlanarPoint> vertex;
  std::unordered_map<std::int64_t, std::int64_t> next;

  auto crossing = [&](long ia, long ja, long ib, long jb) {
    const double fa = grid.value(ia, ja), fb = grid.value(ib, jb);
    const PlanarPoint pa = grid.position(ia, ja), pb = grid.position(ib, jb);
    const double t = fa / (fa - fb);
    return PlanarPoint{pa.x + t * (pb.x - pa.x), pa.y + t * (pb.y - pa.y)};
  };

  for (long j = -1; j <= r; ++j) {
    for (long i = -1; i <= r; ++i) {
      const std::array<std::pair<long, long>, 4> c = {{{i, j}, {i + 1, j}, {i + 1, j + 1}, {i, j + 1}}};
      std::array<bool, 4> pos{};
      for (int k = 0; k < 4; ++k) pos[k] = grid.value(c[k].first, c[k].second) >= 0.0;
      if (pos[0] == pos[1] && pos[1] == pos[2] && pos[2] == pos[3]) continue;

      // Edges in CCW order: bottom, right, top, left.
      const std::array<std::int64_t, 4> ids = {edge_id(i, j, 0), edge_id(i + 1, j, 1), edge_id(i, j + 1, 0),
                                               edge_id(i, j, 1)};
      struct Crossing {
        std::int64_t id;
        bool exit;  // positive -> negative walking CCW
      };
      std::array<Crossing, 4> xs{};
      int count = 0;
      for (int k = 0; k < 4; ++k) {
        const int k1 = (k + 1) % 4;
        if (pos[k] == pos[k1]) continue;
        xs[count++] = {ids[k], pos[k]};
        if (!vertex.contains(ids[k]))
          vertex.emplace(ids[k], crossing(c[k].first, c[k].second, c[k1].first, c[k1].second));
      }
      if (count == 2) {
        const auto& ex = xs[0].exit ? xs[0] : xs[1];
        const auto& en = xs[0].exit ? xs[1] : xs[0];
        next[ex.id] = en.id;
      } else {
        const PlanarPoint lo = grid.position(i, j), hi = grid.position(i + 1, j + 1);
        const bool centre_pos = field({0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y)}) >= 0.0;
        for (int k = 0; k < 4; ++k)
          if (xs[k].exit) next[xs[k].id] = xs[(k + (centre_pos ? 1 : 3)) % 4].id;
      }
    }
  }

  // Chain segments into rings in ascending edge-id order for determinism.
  std::vector<std::int64_t> starts;
  starts.reserve(next.size());
  for (const auto& [id, _] : next) starts.push_back(id);
  std::sort(starts.begin(), starts.end());
  std::unordered_map<std::int64_t, bool> used;
  for (const auto start : starts) {
    if (used[start]) continue;
    Polygon ring;
    std::int64_t cur = start;
    while (!used[cur]) {
      used[cur] = true;
      const PlanarPoint& p = vertex.at(cur);
      if (ring.vertices.empty() || !(ring.vertices.back() == p)) ring.vertices.push_back(p);
      const auto it = next.find(cur);
      if (it == next.end()) break;
      cur = it->second;
    }
    while (ring.vertices.size() > 1 && ring.vertices.front() == ring.vertices.back()) ring.vertices.pop_back();
    if (ring.vertices.size() >= 3 && signed_area(ring) != 0.0) out.rings.push_back(std::move(ring));
  }
  return out;
}

inline ContourResult extract_contour(const OcSvmModel& model, const BoundingBox& box,
                                     std::size_t resolution = kDefaultContourResolution) {
  return extract_contour_field([&](const PlanarPoint& p) { return decision_value(model, p); }, box, resolution);
}

/// Bounding box of the support vectors grown by `margin` of its extent.
inline BoundingBox support_bbox(const OcSvmModel& model, double margin = 0.1) {
  auto box = bounding_box(model.support_vectors);
  const double pad = std::max(box.width(), box.height()) * margin;
  return {box.min_x - pad, box.min_y - pad, box.max_x + pad, box.max_y + pad};
}

/// Even-odd membership against a set of contour rings.
inline bool inside_rings(const PlanarPoint& p, std::span<const Polygon> rings) {
  bool inside = false;
  for (const auto& ring : rings)
    if (point_in_polygon(p, ring)) inside = !inside;
  return inside;
}

/// Area inside `hull` where the model predicts no coverage, estimated from
/// cell centres of a `resolution` x `resolution` grid over `box`.
inline double hull_excess_region(const OcSvmModel& model, const Polygon& hull, const BoundingBox& box,
                                 std::size_t resolution = kDefaultContourResolution) {
  if (resolution == 0) throw std::invalid_argument("resolution must be > 0");
  const double dx = box.width() / static_cast<double>(resolution);
  const double dy = box.height() / static_cast<double>(resolution);
  std::size_t count = 0;
  for (std::size_t j = 0; j < resolution; ++j) {
    for (std::size_t i = 0; i < resolution; ++i) {
      const PlanarPoint c{box.min_x + (static_cast<double>(i) + 0.5) * dx,
                          box.min_y + (static_cast<double>(j) + 0.5) * dy};
      if (point_in_polygon(c, hull) && decision_value(model, c) < 0.0) ++count;
    }
  }
  return static_cast<double>(count) * dx * dy;
}

// ---------------------------------------------------------------------------
// Model files

inline nlohmann::json boundary_to_json(const std::string& cell_id, const CoordinateFrame& frame,
                                       const BandBoundary& bb) {
  nlohmann::json doc;
  if (const auto* m = std::get_if<OcSvmModel>(&bb.predictor)) {
    doc = to_json(*m);
  } else {
    nlohmann::json verts = nlohmann::json::array();
    for (const auto& p : std::get<Polygon>(bb.predictor).vertices) verts.push_back({p.x, p.y});
    doc["version"] = kModelFormatVersion;
    doc["method"] = "hull";
    doc["cell_id"] = cell_id;
    doc["band"] = bb.band;
    doc["coordinate_mode"] = frame_to_json(frame);
    doc["vertices"] = std::move(verts);
    doc["n_train"] = bb.n_points;
  }
  doc["mode"] = std::string(to_string(bb.mode));
  return doc;
}

struct LoadedBoundary {
  std::string cell_id;
  CoordinateFrame frame;
  BandBoundary boundary;
};

inline LoadedBoundary boundary_from_json(const nlohmann::json& doc) {
  check_version(doc);
  try {
    LoadedBoundary out;
    const auto method = parse_method(doc.at("method").get<std::string>());
    out.boundary.mode = parse_mode(doc.value("mode", std::string("partition")));
    if (method == Method::ocsvm) {
      auto m = ocsvm_from_json(doc);
      if (!m.band) throw CorruptPayloadError("model file without band");
      out.cell_id = m.cell_id;
      out.frame = m.frame;
      out.boundary.band = *m.band;
      out.boundary.n_points = m.n_train;
      out.boundary.predictor = std::move(m);
    } else {
      out.cell_id = doc.at("cell_id").get<std::string>();
      out.frame = frame_from_json(doc.at("coordinate_mode"));
      out.boundary.band = doc.at("band").get<int>();
      out.boundary.n_points = doc.at("n_train").get<std::size_t>();
      Polygon poly;
      for (const auto& p : doc.at("vertices")) poly.vertices.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      if (poly.size() < 3) throw CorruptPayloadError("hull with fewer than 3 vertices");
      out.boundary.predictor = std::move(poly);
    }
    if (out.boundary.band < 1 || out.boundary.band > kBandCount) throw CorruptPayloadError("band out of range");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptPayloadError(std::string("malformed boundary file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CorruptPayloadError(std::string("malformed boundary file: ") + e.what());
  }
}

/// Groups loaded boundaries by cell. A cell whose boundaries disagree on frame
/// or method, or repeat a band, is rejected.
inline std::vector<CoverageModel> assemble_models(std::span<const LoadedBoundary> loaded) {
  std::map<std::string, CoverageModel> by_cell;
  for (const auto& lb : loaded) {
    auto [it, fresh] = by_cell.try_emplace(lb.cell_id);
    CoverageModel& cm = it->second;
    if (fresh) {
      cm.cell_id = lb.cell_id;
      cm.mode = lb.boundary.mode;
      cm.frame = lb.frame;
    } else {
      if (!(cm.frame == lb.frame)) throw std::invalid_argument("cell " + lb.cell_id + ": mixed coordinate frames");
      if (!cm.boundaries.empty() && cm.boundaries.begin()->second.method() != lb.boundary.method())
        throw std::invalid_argument("cell " + lb.cell_id + ": mixed boundary methods");
    }
    if (!cm.boundaries.emplace(lb.boundary.band, lb.boundary).second)
      throw std::invalid_argument("cell " + lb.cell_id + ": duplicate band " + std::to_string(lb.boundary.band));
  }
  std::vector<CoverageModel> out;
  for (auto& [_, cm] : by_cell) out.push_back(std::move(cm));
  return out;
}

// ---------------------------------------------------------------------------
// GeoJSON

namespace detail {

inline nlohmann::json ring_coordinates(const Polygon& ring, const CoordinateFrame& frame) {
  nlohmann::json coords = nlohmann::json::array();
  for (const auto& p : ring.vertices) {
    const auto ll = frame.to_lonlat(p);
    coords.push_back({ll.x, ll.y});
  }
  coords.push_back(coords.front());
  return coords;
}

}  // namespace detail

/// GeoJSON geometry from contour rings: CCW rings become polygon exteriors,
/// each CW ring becomes a hole of the smallest exterior containing it.
inline nlohmann::json rings_to_geometry(std::span<const Polygon> rings, const CoordinateFrame& frame) {
  std::vector<const Polygon*> outers, holes;
  for (const auto& r : rings) (signed_area(r) > 0.0 ? outers : holes).push_back(&r);
  std::vector<std::vector<const Polygon*>> holes_of(outers.size());
  for (const auto* h : holes) {
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < outers.size(); ++k) {
      if (!point_in_polygon(h->vertices.front(), *outers[k])) continue;
      if (!best || signed_area(*outers[k]) < signed_area(*outers[*best])) best = k;
    }
    if (best) holes_of[*best].push_back(h);
  }
  nlohmann::json polys = nlohmann::json::array();
  for (std::size_t k = 0; k < outers.size(); ++k) {
    nlohmann::json poly = nlohmann::json::array();
    poly.push_back(detail::ring_coordinates(*outers[k], frame));
    for (const auto* h : holes_of[k]) poly.push_back(detail::ring_coordinates(*h, frame));
    polys.push_back(std::move(poly));
  }
  if (polys.size() == 1) return {{"type", "Polygon"}, {"coordinates", polys[0]}};
  return {{"type", "MultiPolygon"}, {"coordinates", std::move(polys)}};
}

struct ExportOptions {
  std::optional<BoundingBox> lonlat_bbox;  // default: support vectors plus 10%
  std::size_t resolution = kDefaultContourResolution;
};

inline nlohmann::json empty_feature_collection() {
  return {{"type", "FeatureCollection"}, {"features", nlohmann::json::array()}};
}

/// Appends one Feature per boundary of `model`; degenerate contours are
/// skipped and described in `warnings`.
inline void append_features(nlohmann::json& collection, const CoverageModel& model, const ExportOptions& opts,
                            std::vector<std::string>& warnings) {
  for (const auto& [band, bb] : model.boundaries) {
    nlohmann::json props{{"cell_id", model.cell_id}, {"band", band}, {"method", std::string(to_string(bb.method()))},
                         {"mode", std::string(to_string(bb.mode))}, {"nu", nullptr}, {"gamma", nullptr}};
    nlohmann::json geometry;
    if (const auto* m = std::get_if<OcSvmModel>(&bb.predictor)) {
      props["nu"] = m->nu;
      props["gamma"] = m->gamma;
      BoundingBox box = support_bbox(*m);
      if (opts.lonlat_bbox) {
        const auto a = model.frame.to_frame(opts.lonlat_bbox->min_x, opts.lonlat_bbox->min_y);
        const auto b = model.frame.to_frame(opts.lonlat_bbox->max_x, opts.lonlat_bbox->max_y);
        box = {std::min(a.x, b.x), std::min(a.y, b.y), std::max(a.x, b.x), std::max(a.y, b.y)};
      }
      const auto contour = extract_contour(*m, box, opts.resolution);
      const bool has_outer = std::any_of(contour.rings.begin(), contour.rings.end(),
                                         [](const Polygon& r) { return signed_area(r) > 0.0; });
      if (!has_outer) {
        warnings.push_back("cell " + model.cell_id + " band " + std::to_string(band) + ": no contour (" +
                           (contour.diagnostic.empty() ? "no covered region" : contour.diagnostic) + ")");
        continue;
      }
      geometry = rings_to_geometry(contour.rings, model.frame);
    } else {
      const Polygon& hull = std::get<Polygon>(bb.predictor);
      geometry = rings_to_geometry(std::span<const Polygon>(&hull, 1), model.frame);
    }
    collection["features"].push_back(
        {{"type", "Feature"}, {"geometry", std::move(geometry)}, {"properties", std::move(props)}});
  }
}

}  // namespace covmap
