#pragma once

// One-class SVM with an RBF kernel.
//
// Training solves the dual
//
//   min  1/2 sum_ij a_i a_j K(x_i, x_j)
//   s.t. 0 <= a_i <= 1/(nu n),  sum_i a_i = 1
//
// by two-coordinate (SMO) updates on the most violating pair. The decision
// function is f(x) = sum_i a_i K(x_i, x) - rho; f(x) >= 0 means covered.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "covmap/geometry.hpp"

namespace covmap {

struct KernelParams {
  double gamma = 1.0;

  void validate() const {
    if (!(std::isfinite(gamma) && gamma > 0.0))
      throw std::invalid_argument("gamma must be finite and > 0");
  }
};

struct TrainParams {
  double nu = 0.5;
  KernelParams kernel{};
  double tol = 1e-4;
  std::size_t max_iter = 100000;
  // Above this many points the kernel is served from an LRU row cache
  // instead of a full precomputed matrix.
  std::size_t full_matrix_limit = 4096;
  std::size_t cache_bytes = std::size_t{256} << 20;

  void validate() const {
    if (!(nu > 0.0 && nu <= 1.0)) throw std::invalid_argument("nu must lie in (0, 1]");
    kernel.validate();
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
    if (max_iter == 0) throw std::invalid_argument("max_iter must be > 0");
  }
};

struct TrainWindow {
  std::string start;
  std::string end;
  friend bool operator==(const TrainWindow&, const TrainWindow&) = default;
};

struct OcSvmModel {
  std::vector<PlanarPoint> support_vectors;
  std::vector<double> alphas;
  double rho = 0.0;
  double nu = 0.5;
  double gamma = 1.0;
  std::size_t n_train = 0;
  CoordinateFrame frame{};
  std::optional<int> band;
  std::string cell_id;
  std::optional<TrainWindow> train_window;

  double upper_bound() const { return 1.0 / (nu * static_cast<double>(n_train)); }
};

enum class Coverage { not_covered, covered };

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(std::size_t iterations, double gap, OcSvmModel best)
      : std::runtime_error("one-class SVM did not converge after " + std::to_string(iterations) +
                           " iterations (KKT gap " + std::to_string(gap) + ")"),
        iterations_(iterations),
        gap_(gap),
        best_(std::move(best)) {}

  std::size_t iterations() const { return iterations_; }
  double gap() const { return gap_; }
  const OcSvmModel& best_so_far() const { return best_; }

 private:
  std::size_t iterations_;
  double gap_;
  OcSvmModel best_;
};

class VersionMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CorruptPayloadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double rbf_kernel(const PlanarPoint& a, const PlanarPoint& b, double gamma) {
  return std::exp(-gamma * squared_distance(a, b));
}

namespace detail {

// Kernel rows over the training set: a full matrix for small problems, an LRU
// row cache otherwise. A returned row stays valid until it is evicted.
class KernelRows {
 public:
  KernelRows(std::span<const PlanarPoint> points, double gamma, std::size_t full_limit,
             std::size_t cache_bytes)
      : points_(points), gamma_(gamma), n_(points.size()) {
    if (n_ <= full_limit) {
      full_.resize(n_ * n_);
      for (std::size_t i = 0; i < n_; ++i) {
        full_[i * n_ + i] = 1.0;
        for (std::size_t j = i + 1; j < n_; ++j) {
          const double k = rbf_kernel(points_[i], points_[j], gamma_);
          full_[i * n_ + j] = k;
          full_[j * n_ + i] = k;
        }
      }
    } else {
      capacity_ = std::max<std::size_t>(2, cache_bytes / (sizeof(double) * n_));
    }
  }

  bool cached() const { return full_.empty() && n_ > 0; }

  std::span<const double> row(std::size_t i) {
    if (!full_.empty()) return {full_.data() + i * n_, n_};
    if (auto it = index_.find(i); it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->second;
    }
    std::vector<double> r(n_);
    for (std::size_t j = 0; j < n_; ++j) r[j] = rbf_kernel(points_[i], points_[j], gamma_);
    if (lru_.size() >= capacity_) {
      index_.erase(lru_.back().first);
      lru_.pop_back();
    }
    lru_.emplace_front(i, std::move(r));
    index_[i] = lru_.begin();
    return lru_.front().second;
  }

 private:
  std::span<const PlanarPoint> points_;
  double gamma_;
  std::size_t n_;
  std::vector<double> full_;
  std::size_t capacity_ = 0;
  std::list<std::pair<std::size_t, std::vector<double>>> lru_;
  std::unordered_map<std::size_t, decltype(lru_)::iterator> index_;
};

enum class AlphaStatus { lower, free, upper };

}  // namespace detail

/// Full solver output. `alpha` and `gradient` are indexed like the training
/// points; `gradient[i]` is sum_j a_j K(x_i, x_j), so f(x_i) = gradient[i] - rho.
struct TrainResult {
  OcSvmModel model;
  std::vector<double> alpha;
  std::vector<double> gradient;
  std::size_t iterations = 0;
  double gap = 0.0;  // max_{a>0} G - min_{a<C} G at exit
  bool used_row_cache = false;
};

namespace detail {

struct SmoState {
  std::vector<double> alpha;
  std::vector<AlphaStatus> status;
  std::vector<double> grad;
  double upper = 0.0;

  void set_status(std::size_t k) {
    if (alpha[k] <= 0.0) {
      alpha[k] = 0.0;
      status[k] = AlphaStatus::lower;
    } else if (alpha[k] >= upper) {
      alpha[k] = upper;
      status[k] = AlphaStatus::upper;
    } else {
      status[k] = AlphaStatus::free;
    }
  }

  // Most violating pair: `up` can grow (a < C) with the smallest gradient,
  // `down` can shrink (a > 0) with the largest. Lowest index wins ties.
  double select(std::size_t& up, std::size_t& down) const {
    double g_min = std::numeric_limits<double>::infinity();
    double g_max = -std::numeric_limits<double>::infinity();
    up = down = alpha.size();
    for (std::size_t k = 0; k < alpha.size(); ++k) {
      if (status[k] != AlphaStatus::upper && grad[k] < g_min) {
        g_min = grad[k];
        up = k;
      }
      if (status[k] != AlphaStatus::lower && grad[k] > g_max) {
        g_max = grad[k];
        down = k;
      }
    }
    if (up == alpha.size() || down == alpha.size()) return 0.0;
    return g_max - g_min;
  }

  void recompute_gradient(KernelRows& rows) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      if (alpha[j] == 0.0) continue;
      const auto r = rows.row(j);
      for (std::size_t k = 0; k < alpha.size(); ++k) grad[k] += alpha[j] * r[k];
    }
  }

  // Offset from margin support vectors; without any, the midpoint of the
  // interval allowed by the bounded and zero coefficients.
  double offset() const {
    double sum = 0.0;
    std::size_t free_count = 0;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < alpha.size(); ++k) {
      switch (status[k]) {
        case AlphaStatus::free:
          sum += grad[k];
          ++free_count;
          break;
        case AlphaStatus::upper:
          lo = std::max(lo, grad[k]);
          break;
        case AlphaStatus::lower:
          hi = std::min(hi, grad[k]);
          break;
      }
    }
    if (free_count > 0) return sum / static_cast<double>(free_count);
    if (!std::isfinite(hi)) return lo;
    if (!std::isfinite(lo)) return hi;
    return 0.5 * (lo + hi);
  }
};

inline OcSvmModel assemble_model(std::span<const PlanarPoint> points, const SmoState& st,
                                 const TrainParams& params, double rho) {
  OcSvmModel m;
  m.nu = params.nu;
  m.gamma = params.kernel.gamma;
  m.n_train = points.size();
  m.rho = rho;
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (st.alpha[k] > 0.0) {
      m.support_vectors.push_back(points[k]);
      m.alphas.push_back(st.alpha[k]);
    }
  }
  return m;
}

}  // namespace detail

/// Trains on `points` (already in the working frame). Deterministic for fixed
/// inputs. Throws InfeasibleError for an empty training set and
/// NonConvergenceError when the KKT gap stays above `tol` for `max_iter` updates.
inline TrainResult train_detailed(std::span<const PlanarPoint> points, const TrainParams& params) {
  params.validate();
  const std::size_t n = points.size();
  if (n == 0) throw InfeasibleError("one-class SVM needs at least one training point");
  for (const auto& p : points)
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw std::invalid_argument("training points must have finite coordinates");

  detail::KernelRows rows(points, params.kernel.gamma, params.full_matrix_limit, params.cache_bytes);
  detail::SmoState st;
  st.upper = 1.0 / (params.nu * static_cast<double>(n));
  st.status.assign(n, detail::AlphaStatus::lower);
  st.grad.assign(n, 0.0);

  // Uniform start: feasible because 1/n <= 1/(nu n), and invariant under
  // permutation of the input, so duplicated points share their weight.
  st.alpha.assign(n, 1.0 / static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) st.set_status(k);
  st.recompute_gradient(rows);

  std::size_t iter = 0;
  double gap = 0.0;
  while (true) {
    std::size_t up = 0, down = 0;
    gap = st.select(up, down);
    if (gap <= params.tol) {
      // Confirm against a freshly accumulated gradient before stopping.
      st.recompute_gradient(rows);
      gap = st.select(up, down);
      if (gap <= params.tol) break;
    }
    if (iter >= params.max_iter) {
      st.recompute_gradient(rows);
      throw NonConvergenceError(iter, gap, detail::assemble_model(points, st, params, st.offset()));
    }
    ++iter;

    // Capacity >= 2 keeps `r_up` resident while `r_down` is fetched.
    const auto r_up = rows.row(up);
    const auto r_down = rows.row(down);
    double quad = 2.0 - 2.0 * r_up[down];  // K(x, x) = 1
    if (quad <= 1e-12) quad = 1e-12;
    const double room_up = st.upper - st.alpha[up];
    const double room_down = st.alpha[down];
    const double step = std::min({gap / quad, room_up, room_down});
    st.alpha[up] = step == room_up ? st.upper : st.alpha[up] + step;
    st.alpha[down] = step == room_down ? 0.0 : st.alpha[down] - step;
    st.set_status(up);
    st.set_status(down);
    for (std::size_t k = 0; k < n; ++k) st.grad[k] += step * (r_up[k] - r_down[k]);
  }

  TrainResult out;
  out.model = detail::assemble_model(points, st, params, st.offset());
  out.alpha = st.alpha;
  out.gradient = st.grad;
  out.iterations = iter;
  out.gap = gap;
  out.used_row_cache = rows.cached();
  return out;
}

inline OcSvmModel train(std::span<const PlanarPoint> points, const TrainParams& params) {
  return train_detailed(points, params).model;
}

inline double kernel_sum(const OcSvmModel& model, const PlanarPoint& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < model.support_vectors.size(); ++i)
    s += model.alphas[i] * rbf_kernel(model.support_vectors[i], p, model.gamma);
  return s;
}

/// f(p) = sum_i a_i K(sv_i, p) - rho, with p in the model's frame.
inline double decision_value(const OcSvmModel& model, const PlanarPoint& p) {
  return kernel_sum(model, p) - model.rho;
}

inline Coverage predict(const OcSvmModel& model, const PlanarPoint& p) {
  return decision_value(model, p) >= 0.0 ? Coverage::covered : Coverage::not_covered;
}

// ---------------------------------------------------------------------------
// Model files

inline constexpr const char* kModelFormatVersion = "1";

inline nlohmann::json frame_to_json(const CoordinateFrame& frame) {
  if (frame.mode == CoordinateFrame::Mode::degrees) return "degrees";
  return nlohmann::json{{"projected", {frame.projection.lon0, frame.projection.lat0}}};
}

inline CoordinateFrame frame_from_json(const nlohmann::json& j) {
  if (j.is_string() && j.get<std::string>() == "degrees") return CoordinateFrame::degrees();
  if (j.is_object() && j.contains("projected")) {
    const auto& o = j.at("projected");
    return CoordinateFrame::projected(o.at(0).get<double>(), o.at(1).get<double>());
  }
  throw CorruptPayloadError("unrecognised coordinate_mode");
}

inline void check_version(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("version")) throw CorruptPayloadError("model payload has no version");
  const auto& v = doc.at("version");
  if (!v.is_string() || v.get<std::string>() != kModelFormatVersion)
    throw VersionMismatchError("model format version " + v.dump() + ", expected \"" +
                               kModelFormatVersion + "\"");
}

inline nlohmann::json to_json(const OcSvmModel& m) {
  nlohmann::json sv = nlohmann::json::array();
  for (const auto& p : m.support_vectors) sv.push_back({p.x, p.y});
  nlohmann::json doc;
  doc["version"] = kModelFormatVersion;
  doc["method"] = "ocsvm";
  doc["cell_id"] = m.cell_id;
  doc["band"] = m.band ? nlohmann::json(*m.band) : nlohmann::json(nullptr);
  doc["nu"] = m.nu;
  doc["gamma"] = m.gamma;
  doc["rho"] = m.rho;
  doc["coordinate_mode"] = frame_to_json(m.frame);
  doc["support_vectors"] = std::move(sv);
  doc["alphas"] = m.alphas;
  doc["n_train"] = m.n_train;
  doc["train_window"] = m.train_window
                            ? nlohmann::json{m.train_window->start, m.train_window->end}
                            : nlohmann::json(nullptr);
  return doc;
}

inline OcSvmModel ocsvm_from_json(const nlohmann::json& doc) {
  check_version(doc);
  try {
    OcSvmModel m;
    m.cell_id = doc.at("cell_id").get<std::string>();
    if (!doc.at("band").is_null()) m.band = doc.at("band").get<int>();
    m.nu = doc.at("nu").get<double>();
    m.gamma = doc.at("gamma").get<double>();
    m.rho = doc.at("rho").get<double>();
    m.frame = frame_from_json(doc.at("coordinate_mode"));
    for (const auto& p : doc.at("support_vectors")) m.support_vectors.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    m.alphas = doc.at("alphas").get<std::vector<double>>();
    m.n_train = doc.at("n_train").get<std::size_t>();
    if (const auto& w = doc.at("train_window"); !w.is_null())
      m.train_window = TrainWindow{w.at(0).get<std::string>(), w.at(1).get<std::string>()};
    if (m.alphas.size() != m.support_vectors.size() || m.support_vectors.empty())
      throw CorruptPayloadError("support_vectors and alphas disagree in length or are empty");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptPayloadError(std::string("malformed model payload: ") + e.what());
  }
}

/// JSON text; doubles use the shortest decimal that round-trips exactly.
inline std::string serialize(const OcSvmModel& m) { return to_json(m).dump(); }

inline OcSvmModel deserialize(std::string_view payload) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(payload);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptPayloadError(std::string("unparseable model payload: ") + e.what());
  }
  return ocsvm_from_json(doc);
}

}  // namespace covmap
