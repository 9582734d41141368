#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "covmap/evaluation.hpp"
#include "covmap/synthgen.hpp"

using namespace covmap;

namespace {

std::vector<PlanarPoint> cluster(double cx, double cy, double spread, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, spread);
  std::vector<PlanarPoint> out(n);
  for (auto& p : out) p = {cx + g(rng), cy + g(rng)};
  return out;
}

Scenario small_scenario(Shape shape, std::uint64_t seed, const std::string& cell = "cell-0", double lon = -1.5) {
  Scenario s;
  s.shape = shape;
  s.seed = seed;
  s.cell_id = cell;
  s.center_lon = lon;
  s.n_service = 800;
  s.n_noservice = 200;
  return s;
}

Timestamp mid(const Scenario& s) { return s.t_start + (s.t_end - s.t_start) / 2; }

}  // namespace

TEST(F1, Examples) {
  EXPECT_DOUBLE_EQ(f1(1.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(f1(0.5, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(f1(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(f1(0.5, 1.0), 2.0 / 3.0);
}

TEST(ConfusionCounts, UndefinedRatios) {
  ConfusionCounts none{0, 0, 0, 5};
  EXPECT_FALSE(none.precision());
  EXPECT_FALSE(none.recall());
  EXPECT_FALSE(f1_score(none));
  ConfusionCounts no_predictions{0, 0, 4, 2};
  EXPECT_FALSE(no_predictions.precision());
  EXPECT_EQ(no_predictions.recall(), 0.0);
  EXPECT_EQ(f1_score(no_predictions), 0.0);
}

TEST(EvaluateBand, CoverEverything) {
  const auto pos = cluster(0, 0, 1, 10, 1), neg = cluster(5, 5, 1, 10, 2);
  const auto c = evaluate_band([](const PlanarPoint&) { return true; }, pos, neg);
  EXPECT_EQ(c, (ConfusionCounts{10, 10, 0, 0}));
  EXPECT_EQ(c.precision(), 0.5);
  EXPECT_EQ(c.recall(), 1.0);
  EXPECT_EQ(c.total(), 20u);
}

TEST(EvaluateBand, CoverNothing) {
  const auto pos = cluster(0, 0, 1, 10, 1), neg = cluster(5, 5, 1, 10, 2);
  const auto c = evaluate_band([](const PlanarPoint&) { return false; }, pos, neg);
  EXPECT_EQ(c.tp, 0u);
  EXPECT_EQ(c.recall(), 0.0);
  EXPECT_EQ(f1_score(c), 0.0);
}

TEST(EvaluateBand, EmptyPositivesIsUndefined) {
  const auto neg = cluster(5, 5, 1, 10, 2);
  EXPECT_FALSE(f1_score(evaluate_band([](const PlanarPoint&) { return true; }, {}, neg)));
}

TEST(EvaluateBand, AnnulusHullCoversTheHole) {
  const auto s = small_scenario(Shape::annulus, 3);
  const auto split = temporal_split(generate(s).dataset, mid(s));
  const auto train = partition(split.train), val = partition(split.validation);
  TrainParams base;
  base.nu = 0.04;
  base.kernel.gamma = 2e4;
  for (int band = 1; band <= kBandCount; ++band) {
    const auto task = make_task(train, val, s.cell_id, band, {});
    ASSERT_TRUE(task);
    std::size_t in_hole = 0;
    for (const auto& p : task->negatives) in_hole += std::hypot(p.x - s.center_lon, p.y - s.center_lat) < s.r_in;
    ASSERT_GT(in_hole, 0u);
    const auto hull = evaluate_band(convex_hull(task->train), task->positives, task->negatives);
    const auto svm = evaluate_band(covmap::train(task->train, base), task->positives, task->negatives);
    EXPECT_GE(hull.fp, in_hole) << "band " << band;
    EXPECT_GT(hull.fp, svm.fp) << "band " << band;
  }
}

TEST(GridSpec, DefaultsAndValidation) {
  const auto g = GridSpec::defaults();
  EXPECT_EQ(g.nu_values, (std::vector<double>{0.02, 0.04, 0.06, 0.08}));
  EXPECT_EQ(g.gamma_values, (std::vector<double>{1e4, 2e4, 3e4, 4e4}));
  EXPECT_NO_THROW(g.validate());
  EXPECT_THROW((GridSpec{{0.04, 0.02}, {1}}).validate(), std::invalid_argument);
  EXPECT_THROW((GridSpec{{}, {1}}).validate(), std::invalid_argument);
  EXPECT_THROW((GridSpec{{0.5, 0.5}, {1}}).validate(), std::invalid_argument);
  EXPECT_THROW((GridSpec{{1.5}, {1}}).validate(), std::invalid_argument);
}

TEST(GridSearch, SinglePointPassesThrough) {
  const EvalTask t{"c", 1, cluster(0, 0, 0.1, 60, 1), cluster(0, 0, 0.1, 20, 2), cluster(3, 3, 0.1, 20, 3)};
  const auto r = grid_search(std::span<const EvalTask>(&t, 1), GridSpec{{0.3}, {2.0}});
  EXPECT_EQ(r.best_nu, 0.3);
  EXPECT_EQ(r.best_gamma, 2.0);
  ASSERT_EQ(r.table.size(), 1u);
}

TEST(GridSearch, TiesGoToSmallerNuThenGamma) {
  // Far-apart clusters: every grid point separates them perfectly.
  const EvalTask t{"c", 1, cluster(0, 0, 0.1, 60, 1), cluster(0, 0, 0.05, 20, 2), cluster(30, 30, 0.1, 20, 3)};
  const auto r = grid_search(std::span<const EvalTask>(&t, 1), GridSpec{{0.1, 0.2, 0.3}, {0.5, 1.0}});
  for (const auto& c : r.table) EXPECT_EQ(c.f1, 1.0);
  EXPECT_EQ(r.best_nu, 0.1);
  EXPECT_EQ(r.best_gamma, 0.5);

  std::vector<GridCell> table{{0.2, 1.0, {}, 0.8}, {0.1, 2.0, {}, 0.8}, {0.1, 1.0, {}, 0.8}, {0.3, 0.5, {}, 0.7}};
  const auto k = best_cell(table);
  ASSERT_TRUE(k);
  EXPECT_EQ(table[*k].nu, 0.1);
  EXPECT_EQ(table[*k].gamma, 1.0);
}

TEST(GridSearch, ArgmaxMatchesIndependentScanAndOrder) {
  const auto s = small_scenario(Shape::crescent, 5);
  const auto split = temporal_split(generate(s).dataset, mid(s));
  const auto tasks = make_tasks(partition(split.train), partition(split.validation), {});
  ASSERT_FALSE(tasks.empty());
  const auto r = grid_search(tasks, GridSpec::defaults());
  ASSERT_EQ(r.table.size(), 16u);
  double best = -1.0, best_nu = 0.0, best_gamma = 0.0;
  for (double nu : GridSpec::defaults().nu_values)
    for (double gamma : GridSpec::defaults().gamma_values)
      for (const auto& c : r.table) {
        if (c.nu == nu && c.gamma == gamma && c.f1 && *c.f1 > best) {
          best = *c.f1;
          best_nu = nu;
          best_gamma = gamma;
        }
      }
  EXPECT_EQ(r.best_nu, best_nu);
  EXPECT_EQ(r.best_gamma, best_gamma);
  EXPECT_EQ(r.best_f1, best);

  std::vector<GridCell> shuffled = r.table;
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto k = best_cell(shuffled);
    EXPECT_EQ(shuffled[*k].nu, r.best_nu);
    EXPECT_EQ(shuffled[*k].gamma, r.best_gamma);
  }

  const auto parallel = grid_search(tasks, GridSpec::defaults(), {}, 3);
  for (std::size_t k = 0; k < r.table.size(); ++k) {
    EXPECT_EQ(parallel.table[k].f1, r.table[k].f1);
    EXPECT_EQ(parallel.table[k].counts, r.table[k].counts);
  }
}

TEST(GridSearch, AllUndefinedThrows) {
  const EvalTask t{"c", 1, cluster(0, 0, 0.1, 60, 1), {}, cluster(3, 3, 0.1, 20, 3)};
  EXPECT_THROW(grid_search(std::span<const EvalTask>(&t, 1), GridSpec{{0.1, 0.2}, {1.0}}), GridSearchError);
}

TEST(Tasks, NegativePolicy) {
  const auto s = small_scenario(Shape::annulus, 6);
  const auto split = temporal_split(generate(s).dataset, mid(s));
  const auto train = partition(split.train), val = partition(split.validation);
  TaskOptions all, ns_only;
  ns_only.negatives = NegativePolicy::no_service_only;
  const auto a = make_task(train, val, s.cell_id, 3, all);
  const auto b = make_task(train, val, s.cell_id, 3, ns_only);
  ASSERT_TRUE(a && b);
  EXPECT_EQ(b->negatives.size(), val.negatives_of(s.cell_id).size());
  std::size_t others = 0;
  for (int band : {1, 2, 4, 5}) others += val.find(s.cell_id, band)->points.size();
  EXPECT_EQ(a->negatives.size(), b->negatives.size() + others);
  EXPECT_EQ(a->positives.size(), val.find(s.cell_id, 3)->points.size());

  TaskOptions cumulative;
  cumulative.mode = TrainingMode::cumulative;
  const auto c = make_task(train, val, s.cell_id, 3, cumulative);
  std::size_t pos = 0;
  for (int band : {3, 4, 5}) pos += val.find(s.cell_id, band)->points.size();
  EXPECT_EQ(c->positives.size(), pos);
}

TEST(Compare, SingleCellMeansEqualCellScores) {
  const auto s = small_scenario(Shape::annulus, 7);
  const auto report = compare_methods(generate(s).dataset, mid(s), GridSpec{{0.04}, {2e4}});
  EXPECT_TRUE(report.failures.empty());
  ASSERT_EQ(report.rows.size(), 10u);
  for (const auto& row : report.rows) {
    const auto& m = report.means.at(row.band);
    EXPECT_EQ(row.method == Method::hull ? m.hull : m.ocsvm, row.f1);
  }
}

TEST(Compare, MeansRecomputedFromRowsAndHashesMatch) {
  std::vector<Scenario> scenarios;
  for (int k = 0; k < 3; ++k)
    scenarios.push_back(small_scenario(Shape::annulus, 20 + k, "cell-" + std::to_string(k), -1.5 + 0.2 * k));
  const auto ds = generate_suite(scenarios);
  CompareOptions opts;
  opts.jobs = 2;
  const auto report = compare_methods(ds, mid(scenarios[0]), GridSpec{{0.02, 0.06}, {1e4, 3e4}}, opts);
  ASSERT_EQ(report.rows.size(), 30u);
  for (int band = 1; band <= kBandCount; ++band) {
    double hull = 0.0, svm = 0.0;
    int nh = 0, ns = 0;
    std::map<std::string, std::string> hash_of;
    for (const auto& r : report.rows) {
      if (r.band != band) continue;
      (r.method == Method::hull ? hull : svm) += *r.f1;
      ++(r.method == Method::hull ? nh : ns);
      auto [it, fresh] = hash_of.emplace(r.cell_id, r.data_hash);
      if (!fresh) {
        EXPECT_EQ(it->second, r.data_hash);
      }
    }
    EXPECT_EQ(nh, 3);
    EXPECT_EQ(ns, 3);
    EXPECT_NEAR(*report.means.at(band).hull, hull / 3.0, 1e-15);
    EXPECT_NEAR(*report.means.at(band).ocsvm, svm / 3.0, 1e-15);
  }
}

TEST(Compare, UndefinedScoresAreExcludedFromMeans) {
  EvalRow defined, undefined;
  defined.cell_id = "a";
  defined.band = undefined.band = 2;
  defined.method = undefined.method = Method::hull;
  defined.f1 = 0.6;
  undefined.cell_id = "b";
  const std::vector<EvalRow> rows{defined, undefined};
  const auto means = band_means(rows);
  EXPECT_EQ(means.at(2).hull, 0.6);
  EXPECT_EQ(means.at(2).hull_cells, 1u);
  EXPECT_FALSE(means.at(2).ocsvm);
  EXPECT_EQ(means.size(), 5u);
}

TEST(Report, CsvAndSummaryLayout) {
  const auto s = small_scenario(Shape::annulus, 8);
  const auto report = compare_methods(generate(s).dataset, mid(s), GridSpec{{0.04}, {2e4}});
  std::ostringstream csv, text;
  write_report_csv(csv, report);
  write_summary_table(text, report);
  std::istringstream lines(csv.str());
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header, "cell_id,band,method,nu,gamma,tp,fp,fn,tn,precision,recall,f1");
  std::istringstream table(text.str());
  std::string line;
  std::getline(table, line);
  EXPECT_NE(line.find("Category"), std::string::npos);
  EXPECT_NE(line.find("Convex Hull"), std::string::npos);
  EXPECT_NE(line.find("OC-SVM"), std::string::npos);
  for (int band = 1; band <= kBandCount; ++band) {
    ASSERT_TRUE(std::getline(table, line));
    EXPECT_EQ(line.rfind(std::string(band_category(band)), 0), 0u) << line;
  }
}

TEST(Format, ShortestRoundTrip) {
  EXPECT_EQ(format_number(20000), "20000");
  EXPECT_EQ(format_number(0.04), "0.04");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.3333333333333333");
  EXPECT_EQ(std::stod(format_number(0.1 + 0.2)), 0.1 + 0.2);
}
