#pragma once

// Scoring of coverage boundaries against held-out measurements: confusion
// counts, precision/recall/F1, (nu, gamma) grid search on temporal splits,
// and the hull vs one-class SVM comparison averaged over cells.

#include <concepts>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "covmap/boundary.hpp"
#include "covmap/geometry.hpp"
#include "covmap/measurements.hpp"
#include "covmap/ocsvm.hpp"
#include "covmap/parallel.hpp"

namespace covmap {

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }

  std::optional<double> precision() const {
    if (tp + fp == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  std::optional<double> recall() const {
    if (tp + fn == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(tp + fn);
  }

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Harmonic mean of precision and recall; 0 when both are 0.
inline double f1(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

/// F1 of a confusion table. Undefined without positives; when nothing was
/// predicted covered (precision undefined) the score is 0.
inline std::optional<double> f1_score(const ConfusionCounts& c) {
  const auto r = c.recall();
  if (!r) return std::nullopt;
  const auto p = c.precision();
  if (!p) return 0.0;
  return f1(*p, *r);
}

template <typename Covers>
  requires std::predicate<Covers&, const PlanarPoint&>
ConfusionCounts evaluate_band(Covers&& covers, std::span<const PlanarPoint> positives,
                              std::span<const PlanarPoint> negatives) {
  ConfusionCounts c;
  for (const auto& p : positives) (covers(p) ? c.tp : c.fn)++;
  for (const auto& p : negatives) (covers(p) ? c.fp : c.tn)++;
  return c;
}

inline ConfusionCounts evaluate_band(const OcSvmModel& m, std::span<const PlanarPoint> positives,
                                     std::span<const PlanarPoint> negatives) {
  return evaluate_band([&](const PlanarPoint& p) { return predict(m, p) == Coverage::covered; }, positives,
                       negatives);
}

inline ConfusionCounts evaluate_band(const Polygon& hull, std::span<const PlanarPoint> positives,
                                     std::span<const PlanarPoint> negatives) {
  return evaluate_band([&](const PlanarPoint& p) { return point_in_polygon(p, hull); }, positives, negatives);
}

// ---------------------------------------------------------------------------
// Grid search

struct GridSpec {
  std::vector<double> nu_values;
  std::vector<double> gamma_values;

  static GridSpec defaults() { return {{0.02, 0.04, 0.06, 0.08}, {1e4, 2e4, 3e4, 4e4}}; }

  void validate() const {
    auto increasing = [](const std::vector<double>& v) {
      for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) return false;
      return !v.empty();
    };
    if (!increasing(nu_values) || !increasing(gamma_values))
      throw std::invalid_argument("grid values must be non-empty and strictly increasing");
    for (double nu : nu_values)
      if (!(nu > 0.0 && nu <= 1.0)) throw std::invalid_argument("grid nu outside (0, 1]");
    for (double g : gamma_values)
      if (!(g > 0.0)) throw std::invalid_argument("grid gamma must be > 0");
  }
};

/// One train/validate problem in a common working frame.
struct EvalTask {
  std::string cell_id;
  int band = 0;
  std::vector<PlanarPoint> train;
  std::vector<PlanarPoint> positives;
  std::vector<PlanarPoint> negatives;
};

struct GridCell {
  double nu = 0.0;
  double gamma = 0.0;
  ConfusionCounts counts;     // summed over tasks that trained
  std::optional<double> f1;   // mean over tasks with a defined score
  std::size_t scored_tasks = 0;
  std::size_t failed_tasks = 0;
};

struct GridResult {
  double best_nu = 0.0;
  double best_gamma = 0.0;
  double best_f1 = 0.0;
  std::vector<GridCell> table;  // nu-major, gamma-minor

  const GridCell& best() const {
    for (const auto& c : table)
      if (c.nu == best_nu && c.gamma == best_gamma) return c;
    throw std::logic_error("best grid cell missing from table");
  }
};

class GridSearchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Index of the best cell: highest F1, ties to smaller nu then smaller gamma.
inline std::optional<std::size_t> best_cell(std::span<const GridCell> table) {
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < table.size(); ++k) {
    const auto& c = table[k];
    if (!c.f1) continue;
    if (!best) {
      best = k;
      continue;
    }
    const auto& b = table[*best];
    if (*c.f1 > *b.f1 || (*c.f1 == *b.f1 && (c.nu < b.nu || (c.nu == b.nu && c.gamma < b.gamma)))) best = k;
  }
  return best;
}

inline GridCell score_grid_point(std::span<const EvalTask> tasks, double nu, double gamma, const TrainParams& base) {
  GridCell cell;
  cell.nu = nu;
  cell.gamma = gamma;
  TrainParams params = base;
  params.nu = nu;
  params.kernel.gamma = gamma;
  double f1_sum = 0.0;
  for (const auto& task : tasks) {
    OcSvmModel model;
    try {
      model = train(task.train, params);
    } catch (const std::runtime_error&) {
      ++cell.failed_tasks;
      continue;
    }
    const auto counts = evaluate_band(model, task.positives, task.negatives);
    cell.counts += counts;
    if (const auto s = f1_score(counts)) {
      f1_sum += *s;
      ++cell.scored_tasks;
    }
  }
  if (cell.scored_tasks > 0) cell.f1 = f1_sum / static_cast<double>(cell.scored_tasks);
  return cell;
}

/// Exhaustive (nu, gamma) search. Each grid point is scored by the mean F1
/// over `tasks` (one task: per-cell search; many: pooled search).
inline GridResult grid_search(std::span<const EvalTask> tasks, const GridSpec& grid, const TrainParams& base = {},
                              std::size_t jobs = 1) {
  grid.validate();
  GridResult out;
  out.table.resize(grid.nu_values.size() * grid.gamma_values.size());
  parallel_for(out.table.size(), jobs, [&](std::size_t k) {
    const double nu = grid.nu_values[k / grid.gamma_values.size()];
    const double gamma = grid.gamma_values[k % grid.gamma_values.size()];
    out.table[k] = score_grid_point(tasks, nu, gamma, base);
  });
  const auto best = best_cell(out.table);
  if (!best) throw GridSearchError("grid search: no grid point produced a defined F1 score");
  out.best_nu = out.table[*best].nu;
  out.best_gamma = out.table[*best].gamma;
  out.best_f1 = *out.table[*best].f1;
  return out;
}

// ---------------------------------------------------------------------------
// Tasks from partitions

enum class NegativePolicy { no_service_and_other_bands, no_service_only };

/// Validation positives and negatives (lon/lat) for (cell, band).
inline std::pair<std::vector<PlanarPoint>, std::vector<PlanarPoint>> validation_sets(const Partitions& val,
                                                                                     const std::string& cell, int band,
                                                                                     TrainingMode mode,
                                                                                     NegativePolicy policy) {
  std::vector<PlanarPoint> pos, neg;
  for (int b = 1; b <= kBandCount; ++b) {
    const auto* bp = val.find(cell, b);
    if (!bp) continue;
    const bool positive = mode == TrainingMode::partition ? b == band : b >= band;
    if (positive)
      pos.insert(pos.end(), bp->points.begin(), bp->points.end());
    else if (policy == NegativePolicy::no_service_and_other_bands)
      neg.insert(neg.end(), bp->points.begin(), bp->points.end());
  }
  const auto ns = val.negatives_of(cell);
  neg.insert(neg.end(), ns.begin(), ns.end());
  neg.insert(neg.end(), val.global_negatives.begin(), val.global_negatives.end());
  return {std::move(pos), std::move(neg)};
}

struct TaskOptions {
  TrainingMode mode = TrainingMode::partition;
  NegativePolicy negatives = NegativePolicy::no_service_and_other_bands;
  CoordinateFrame::Mode frame = CoordinateFrame::Mode::degrees;
};

/// Builds the task for (cell, band), or nullopt when the training set is below
/// `train.min_points`.
inline std::optional<EvalTask> make_task(const Partitions& train, const Partitions& val, const std::string& cell,
                                         int band, const TaskOptions& opts) {
  const auto train_ll = training_points(train, cell, band, opts.mode);
  if (train_ll.empty() || train_ll.size() < train.min_points) return std::nullopt;
  const auto frame = cell_frame(train, cell, opts.frame);
  auto [pos, neg] = validation_sets(val, cell, band, opts.mode, opts.negatives);
  EvalTask t;
  t.cell_id = cell;
  t.band = band;
  t.train = to_frame(frame, train_ll);
  t.positives = to_frame(frame, pos);
  t.negatives = to_frame(frame, neg);
  return t;
}

inline std::vector<EvalTask> make_tasks(const Partitions& train, const Partitions& val, const TaskOptions& opts) {
  std::vector<EvalTask> tasks;
  for (const auto& cell : train.cells())
    for (int band = 1; band <= kBandCount; ++band)
      if (auto t = make_task(train, val, cell, band, opts)) tasks.push_back(std::move(*t));
  return tasks;
}

/// FNV-1a over the task's point coordinates, hex encoded.
inline std::string content_hash(const EvalTask& t) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const void* data, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto* set : {&t.train, &t.positives, &t.negatives}) {
    const std::uint64_t n = set->size();
    mix(&n, sizeof n);
    for (const auto& p : *set) {
      mix(&p.x, sizeof p.x);
      mix(&p.y, sizeof p.y);
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Method comparison

struct EvalRow {
  std::string cell_id;
  int band = 0;
  Method method = Method::hull;
  std::optional<double> nu, gamma;
  ConfusionCounts counts;
  std::optional<double> precision, recall, f1;
  std::string data_hash;
};

struct BandMeans {
  std::optional<double> hull, ocsvm;
  std::size_t hull_cells = 0, ocsvm_cells = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::map<int, BandMeans> means;  // keyed 1..5, always fully populated
  std::vector<std::string> failures;
  std::vector<std::string> warnings;
};

struct CompareOptions {
  TaskOptions task{};
  TrainParams base{};
  std::size_t jobs = 1;
};

inline EvalRow make_row(const EvalTask& task, Method method, const ConfusionCounts& c, const std::string& hash) {
  EvalRow row;
  row.cell_id = task.cell_id;
  row.band = task.band;
  row.method = method;
  row.counts = c;
  row.precision = c.precision();
  row.recall = c.recall();
  row.f1 = f1_score(c);
  row.data_hash = hash;
  return row;
}

/// Per-band means over cells with a defined F1, for both methods.
inline std::map<int, BandMeans> band_means(std::span<const EvalRow> rows) {
  std::map<int, BandMeans> means;
  std::map<int, std::pair<double, double>> sums;
  for (int b = 1; b <= kBandCount; ++b) means[b] = {};
  for (const auto& r : rows) {
    if (!r.f1) continue;
    auto& m = means[r.band];
    if (r.method == Method::hull) {
      sums[r.band].first += *r.f1;
      ++m.hull_cells;
    } else {
      sums[r.band].second += *r.f1;
      ++m.ocsvm_cells;
    }
  }
  for (auto& [b, m] : means) {
    if (m.hull_cells) m.hull = sums[b].first / static_cast<double>(m.hull_cells);
    if (m.ocsvm_cells) m.ocsvm = sums[b].second / static_cast<double>(m.ocsvm_cells);
  }
  return means;
}

/// Hull and grid-searched one-class SVM scored on identical train/validation
/// data for every trainable (cell, band). Failures are isolated per task.
inline EvalReport compare_partitions(const Partitions& train, const Partitions& val, const GridSpec& grid,
                                     const CompareOptions& opts = {}) {
  grid.validate();
  EvalReport report;
  std::vector<EvalTask> tasks;
  for (const auto& cell : train.cells()) {
    for (int band = 1; band <= kBandCount; ++band) {
      auto t = make_task(train, val, cell, band, opts.task);
      if (t) {
        tasks.push_back(std::move(*t));
      } else if (!training_points(train, cell, band, opts.task.mode).empty()) {
        report.warnings.push_back("cell " + cell + " band " + std::to_string(band) + ": below min_points, skipped");
      }
    }
  }

  struct Outcome {
    std::vector<EvalRow> rows;
    std::vector<std::string> failures;
  };
  std::vector<Outcome> outcomes(tasks.size());
  parallel_for(tasks.size(), opts.jobs, [&](std::size_t k) {
    const auto& task = tasks[k];
    auto& out = outcomes[k];
    const std::string where = "cell " + task.cell_id + " band " + std::to_string(task.band);
    const std::string hash = content_hash(task);
    try {
      const auto hull = convex_hull(task.train);
      out.rows.push_back(make_row(task, Method::hull, evaluate_band(hull, task.positives, task.negatives), hash));
    } catch (const std::exception& e) {
      out.failures.push_back(where + " hull: " + e.what());
    }
    try {
      const auto gs = grid_search(std::span<const EvalTask>(&task, 1), grid, opts.base);
      auto row = make_row(task, Method::ocsvm, gs.best().counts, hash);
      row.nu = gs.best_nu;
      row.gamma = gs.best_gamma;
      out.rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      out.failures.push_back(where + " ocsvm: " + e.what());
    }
  });
  for (auto& o : outcomes) {
    for (auto& r : o.rows) report.rows.push_back(std::move(r));
    for (auto& f : o.failures) report.failures.push_back(std::move(f));
  }
  report.means = band_means(report.rows);
  return report;
}

inline EvalReport compare_methods(const Dataset& dataset, Timestamp split_instant, const GridSpec& grid,
                                  const CompareOptions& opts = {}, std::size_t min_points = kDefaultMinPoints) {
  auto split = temporal_split(dataset, split_instant);
  const auto train = partition(split.train, min_points);
  const auto val = partition(split.validation, min_points);
  auto report = compare_partitions(train, val, grid, opts);
  report.warnings.insert(report.warnings.begin(), split.warnings.begin(), split.warnings.end());
  return report;
}

// ---------------------------------------------------------------------------
// Output

inline std::string format_number(double v) {
  char buf[32];
  if (v == std::trunc(v) && std::abs(v) < 1e15) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
    return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the shortest form that still round-trips.
  for (int prec = 1; prec <= 17; ++prec) {
    char shorter[32];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

inline void write_report_csv(std::ostream& os, const EvalReport& report) {
  os << "cell_id,band,method,nu,gamma,tp,fp,fn,tn,precision,recall,f1\n";
  for (const auto& r : report.rows) {
    os << r.cell_id << ',' << r.band << ',' << to_string(r.method) << ',' << format_optional(r.nu) << ','
       << format_optional(r.gamma) << ',' << r.counts.tp << ',' << r.counts.fp << ',' << r.counts.fn << ','
       << r.counts.tn << ',' << format_optional(r.precision) << ',' << format_optional(r.recall) << ','
       << format_optional(r.f1) << '\n';
  }
}

/// Per-band mean F1 table: one row per band, hull and OC-SVM columns.
inline void write_summary_table(std::ostream& os, const EvalReport& report) {
  auto cell = [](const std::optional<double>& v) {
    char buf[32];
    if (v)
      std::snprintf(buf, sizeof buf, "%-12.6f", *v);
    else
      std::snprintf(buf, sizeof buf, "%-12s", "n/a");
    return std::string(buf);
  };
  char line[256];
  std::snprintf(line, sizeof line, "%-36s %-20s %-12s %-12s\n", "Category", "Signal Level (dBm)", "Convex Hull",
                "OC-SVM");
  os << line;
  for (int b = 1; b <= kBandCount; ++b) {
    const auto it = report.means.find(b);
    const BandMeans m = it == report.means.end() ? BandMeans{} : it->second;
    std::snprintf(line, sizeof line, "%-36s %-20s ", std::string(band_category(b)).c_str(),
                  std::string(band_level_text(b)).c_str());
    os << line << cell(m.hull) << ' ' << cell(m.ocsvm) << '\n';
  }
}

inline void write_grid_csv(std::ostream& os, std::span<const GridCell> table, const std::string& prefix_header = "",
                           const std::string& prefix = "") {
  if (!prefix_header.empty()) os << prefix_header << ',';
  os << "nu,gamma,f1,tp,fp,fn,tn,scored_tasks,failed_tasks\n";
  for (const auto& c : table) {
    if (!prefix.empty()) os << prefix << ',';
    os << format_number(c.nu) << ',' << format_number(c.gamma) << ',' << format_optional(c.f1) << ',' << c.counts.tp
       << ',' << c.counts.fp << ',' << c.counts.fn << ',' << c.counts.tn << ',' << c.scored_tasks << ','
       << c.failed_tasks << '\n';
  }
}

}  // namespace covmap
