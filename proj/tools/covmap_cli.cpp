// covmap: coverage boundaries from crowdsourced measurements.
//
//   covmap synth        generate a seeded synthetic measurement CSV
//   covmap train        fit per (cell, band) boundaries and write model files
//   covmap grid-search  (nu, gamma) search on a temporal split
//   covmap compare      hull vs one-class SVM F1 per band
//   covmap export       boundaries as GeoJSON
//   covmap query        highest band at a location
//
// Exit codes: 0 success, 1 domain failure, 2 usage error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "covmap/covmap.hpp"

namespace fs = std::filesystem;
using namespace covmap;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = covmap::detail::parse_double(item);
    if (!v) throw UsageError(std::string("bad number in ") + what + ": '" + item + "'");
    out.push_back(*v);
  }
  if (out.empty()) throw UsageError(std::string(what) + " is empty");
  return out;
}

Timestamp parse_instant(const std::string& text) {
  if (auto t = parse_timestamp(text)) return *t;
  if (auto t = parse_timestamp(text + "T00:00:00Z")) return *t;
  throw UsageError("bad timestamp '" + text + "' (expected YYYY-MM-DD or YYYY-MM-DDTHH:MM:SSZ)");
}

std::string safe_name(const std::string& s) {
  std::string out;
  for (char c : s) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' ? c : '_');
  return out.empty() ? "_" : out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DomainError("cannot create directory " + dir + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DomainError("cannot write " + path.string());
  return os;
}

// ---------------------------------------------------------------------------
// Shared data options

struct DataOptions {
  std::vector<std::string> inputs;
  std::string split;
  std::size_t min_points = kDefaultMinPoints;
  std::string mode = "partition";
  std::string coords = "degrees";
  std::string negatives = "all";
  std::size_t jobs = 1;

  void add_to(CLI::App* cmd, bool with_split) {
    cmd->add_option("-i,--input", inputs, "measurement CSV file(s)")->required()->check(CLI::ExistingFile);
    if (with_split)
      cmd->add_option("--split", split, "split instant; earlier records train (default: mid-range)");
    cmd->add_option("--min-points", min_points, "minimum points per (cell, band)")->capture_default_str();
    cmd->add_option("--mode", mode, "partition | cumulative")->capture_default_str()
        ->check(CLI::IsMember({"partition", "cumulative"}));
    cmd->add_option("--coords", coords, "degrees | projected")->capture_default_str()
        ->check(CLI::IsMember({"degrees", "projected"}));
    cmd->add_option("--negatives", negatives, "all | no-service")->capture_default_str()
        ->check(CLI::IsMember({"all", "no-service"}));
    cmd->add_option("-j,--jobs", jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  }

  Dataset load() const {
    Dataset all;
    for (const auto& path : inputs) {
      auto ds = parse_csv(path);
      for (const auto& w : ds.provenance.errors)
        std::cerr << "warning: " << path << ": line " << w.line << ": " << w.message << '\n';
      all.records.insert(all.records.end(), ds.records.begin(), ds.records.end());
      if (!all.provenance.source.empty()) all.provenance.source += ';';
      all.provenance.source += path;
    }
    sort_by_time(all.records);
    all.provenance.accepted = all.records.size();
    return all;
  }

  Timestamp split_instant(const Dataset& ds) const {
    if (!split.empty()) return parse_instant(split);
    if (ds.empty()) throw DomainError("empty dataset");
    const auto a = ds.records.front().timestamp, b = ds.records.back().timestamp;
    return a + (b - a) / 2;
  }

  TaskOptions task_options() const {
    TaskOptions t;
    t.mode = parse_mode(mode);
    t.frame = coords == "projected" ? CoordinateFrame::Mode::projected : CoordinateFrame::Mode::degrees;
    t.negatives = negatives == "all" ? NegativePolicy::no_service_and_other_bands : NegativePolicy::no_service_only;
    return t;
  }
};

struct SolverOptions {
  double tol = 1e-4;
  std::size_t max_iter = 100000;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--tol", tol, "KKT tolerance")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--max-iter", max_iter, "solver iteration cap")->capture_default_str()->check(CLI::PositiveNumber);
  }

  TrainParams params() const {
    TrainParams p;
    p.tol = tol;
    p.max_iter = max_iter;
    return p;
  }
};

struct GridOptions {
  std::string nu_grid = "0.02,0.04,0.06,0.08";
  std::string gamma_grid = "10000,20000,30000,40000";

  void add_to(CLI::App* cmd) {
    cmd->add_option("--nu-grid", nu_grid, "comma-separated nu values")->capture_default_str();
    cmd->add_option("--gamma-grid", gamma_grid, "comma-separated gamma values")->capture_default_str();
  }

  GridSpec spec() const {
    GridSpec g{parse_list(nu_grid, "--nu-grid"), parse_list(gamma_grid, "--gamma-grid")};
    try {
      g.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return g;
  }
};

void echo_config(CLI::App* cmd, const std::string& dir) {
  auto os = open_out(fs::path(dir) / "effective_config.ini");
  std::istringstream lines(cmd->config_to_str(true, false));
  // Drop the config key itself so the echo can be fed back through --config.
  for (std::string line; std::getline(lines, line);)
    if (line.rfind("config=", 0) != 0) os << line << '\n';
}

// ---------------------------------------------------------------------------
// synth

struct SynthCommand {
  std::string shape;
  std::string out;
  std::uint64_t seed = 1;
  std::size_t cells = 1;
  double spacing = 0.1;
  Scenario base{};
  std::string start = "2024-01-01", end = "2024-03-01";

  void add_to(CLI::App* cmd) {
    cmd->add_option("--shape", shape, "disk | annulus | crescent | multi_blob")->required();
    cmd->add_option("-o,--out", out, "output CSV path")->required();
    cmd->add_option("--seed", seed, "PRNG seed")->capture_default_str();
    cmd->add_option("--cells", cells, "number of cells, laid out on a grid")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--cell-spacing", spacing, "grid spacing between cells in degrees")->capture_default_str();
    cmd->add_option("--center-lon", base.center_lon)->capture_default_str();
    cmd->add_option("--center-lat", base.center_lat)->capture_default_str();
    cmd->add_option("--r-in", base.r_in, "annulus inner radius (deg)")->capture_default_str();
    cmd->add_option("--r-out", base.r_out, "outer radius (deg)")->capture_default_str();
    cmd->add_option("--bite-offset", base.bite_offset)->capture_default_str();
    cmd->add_option("--bite-radius", base.bite_radius)->capture_default_str();
    cmd->add_option("--blobs", base.blobs)->capture_default_str();
    cmd->add_option("--blob-radius", base.blob_radius)->capture_default_str();
    cmd->add_option("--blob-spread", base.blob_spread)->capture_default_str();
    cmd->add_option("--n-service", base.n_service, "service samples per cell")->capture_default_str();
    cmd->add_option("--n-noservice", base.n_noservice, "no-service samples per cell")->capture_default_str();
    cmd->add_option("--noise", base.gps_noise_sigma, "GPS noise sigma (deg)")->capture_default_str();
    cmd->add_option("--hole-fraction", base.hole_fraction)->capture_default_str();
    cmd->add_option("--start", start, "first timestamp")->capture_default_str();
    cmd->add_option("--end", end, "end of timestamp range")->capture_default_str();
  }

  std::vector<Scenario> scenarios() const {
    Shape sh;
    try {
      sh = parse_shape(shape);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(cells))));
    std::vector<Scenario> out;
    for (std::size_t k = 0; k < cells; ++k) {
      Scenario s = base;
      s.shape = sh;
      s.t_start = parse_instant(start);
      s.t_end = parse_instant(end);
      char id[32];
      std::snprintf(id, sizeof id, "cell-%02zu", k);
      s.cell_id = id;
      s.center_lon = base.center_lon + spacing * static_cast<double>(k % side);
      s.center_lat = base.center_lat + spacing * static_cast<double>(k / side);
      s.seed = seed * 1000003ull + k;
      try {
        s.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("invalid scenario: ") + e.what());
      }
      out.push_back(s);
    }
    return out;
  }

  int run() const {
    const auto sc = scenarios();
    const auto ds = generate_suite(sc);
    {
      auto os = open_out(out);
      write_csv(os, ds.records);
    }
    auto side = open_out(out + ".scenario");
    for (const auto& s : sc) {
      side << "[" << s.cell_id << "]\n";
      write_sidecar(side, s);
      side << '\n';
    }
    std::cout << "wrote " << ds.size() << " records for " << sc.size() << " cell(s) to " << out << '\n';
    return 0;
  }
};

// ---------------------------------------------------------------------------
// train

struct TrainCommand {
  DataOptions data;
  SolverOptions solver;
  std::string out;
  std::string method = "ocsvm";
  double nu = 0.04;
  double gamma = 2e4;
  std::string params_file;
  CLI::App* cmd = nullptr;

  void add_to(CLI::App* c) {
    cmd = c;
    data.add_to(c, true);
    solver.add_to(c);
    c->add_option("-o,--out", out, "output directory")->required();
    c->add_option("--method", method, "ocsvm | hull")->capture_default_str()->check(CLI::IsMember({"ocsvm", "hull"}));
    c->add_option("--nu", nu)->capture_default_str();
    c->add_option("--gamma", gamma)->capture_default_str();
    c->add_option("--params", params_file, "best-params file from grid-search (overrides --nu/--gamma)");
  }

  void load_params() {
    if (params_file.empty()) return;
    std::ifstream in(params_file);
    if (!in) throw UsageError("cannot open " + params_file);
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const auto key = covmap::detail::trim(std::string_view(line).substr(0, eq));
      const auto val = covmap::detail::parse_double(std::string_view(line).substr(eq + 1));
      if (key == "nu" && val) nu = *val;
      if (key == "gamma" && val) gamma = *val;
    }
    // Keep the echoed config in step with the values actually used.
    cmd->get_option("--nu")->clear();
    cmd->get_option("--nu")->add_result(format_number(nu));
    cmd->get_option("--gamma")->clear();
    cmd->get_option("--gamma")->add_result(format_number(gamma));
  }

  int run() {
    load_params();
    if (!(nu > 0.0 && nu <= 1.0) || !(gamma > 0.0)) throw UsageError("nu must lie in (0, 1] and gamma be > 0");
    auto ds = data.load();
    std::optional<Timestamp> cutoff;
    if (!data.split.empty()) {
      cutoff = parse_instant(data.split);
      ds = temporal_split(ds, *cutoff).train;
    }
    const auto parts = partition(ds, data.min_points);
    const auto cells = parts.cells();
    const auto opts = data.task_options();
    MethodSpec spec;
    spec.method = parse_method(method);
    spec.params = solver.params();
    spec.params.nu = nu;
    spec.params.kernel.gamma = gamma;

    std::optional<TrainWindow> window;
    if (!ds.empty())
      window = TrainWindow{format_timestamp(ds.records.front().timestamp), format_timestamp(ds.records.back().timestamp)};

    std::vector<BuildResult> built(cells.size());
    parallel_for(cells.size(), data.jobs,
                 [&](std::size_t k) { built[k] = build(parts, cells[k], spec, opts.mode, opts.frame); });

    ensure_dir(out);
    auto manifest = open_out(fs::path(out) / "manifest.csv");
    manifest << "cell_id,band,status,file,n_points,detail\n";
    std::size_t written = 0;
    for (auto& br : built) {
      std::map<int, std::string> rows;
      for (auto& [band, bb] : br.model.boundaries) {
        if (auto* m = std::get_if<OcSvmModel>(&bb.predictor)) m->train_window = window;
        const std::string file = safe_name(br.model.cell_id) + "__band" + std::to_string(band) + "." + method + ".json";
        auto os = open_out(fs::path(out) / file);
        auto doc = boundary_to_json(br.model.cell_id, br.model.frame, bb);
        if (window && spec.method == Method::hull) doc["train_window"] = {window->start, window->end};
        os << doc.dump(1) << '\n';
        rows[band] = br.model.cell_id + "," + std::to_string(band) + ",trained," + file + "," +
                     std::to_string(bb.n_points) + ",";
        ++written;
      }
      for (const auto& skip : br.skipped) {
        std::string reason = skip.reason;
        std::replace(reason.begin(), reason.end(), ',', ';');
        rows[skip.band] = br.model.cell_id + "," + std::to_string(skip.band) + ",skipped,,," + reason;
      }
      for (const auto& [_, row] : rows) manifest << row << '\n';
    }
    echo_config(cmd, out);
    std::cout << "trained " << written << " boundaries for " << cells.size() << " cell(s) into " << out << '\n';
    if (written == 0) throw DomainError("no trainable partitions");
    return 0;
  }
};

// ---------------------------------------------------------------------------
// grid-search

struct GridSearchCommand {
  DataOptions data;
  SolverOptions solver;
  GridOptions grid;
  std::string out;
  bool per_cell = false;
  CLI::App* cmd = nullptr;

  void add_to(CLI::App* c) {
    cmd = c;
    data.add_to(c, true);
    solver.add_to(c);
    grid.add_to(c);
    c->add_option("-o,--out", out, "output directory")->required();
    c->add_flag("--per-cell", per_cell, "search each (cell, band) separately instead of pooling");
  }

  int run() {
    const auto spec = grid.spec();
    const auto ds = data.load();
    const auto split = temporal_split(ds, data.split_instant(ds));
    for (const auto& w : split.warnings) std::cerr << "warning: " << w << '\n';
    const auto train = partition(split.train, data.min_points);
    const auto val = partition(split.validation, data.min_points);
    const auto tasks = make_tasks(train, val, data.task_options());
    if (tasks.empty()) throw DomainError("no trainable (cell, band) partitions in the training window");
    ensure_dir(out);

    if (!per_cell) {
      const auto result = grid_search(tasks, spec, solver.params(), data.jobs);
      {
        auto os = open_out(fs::path(out) / "grid_table.csv");
        write_grid_csv(os, result.table);
      }
      auto os = open_out(fs::path(out) / "best_params.txt");
      os << "nu=" << format_number(result.best_nu) << "\ngamma=" << format_number(result.best_gamma)
         << "\nf1=" << format_number(result.best_f1) << '\n';
      std::cout << "best nu=" << format_number(result.best_nu) << " gamma=" << format_number(result.best_gamma)
                << " mean F1=" << format_number(result.best_f1) << " over " << tasks.size() << " task(s)\n";
    } else {
      std::vector<std::optional<GridResult>> results(tasks.size());
      std::vector<std::string> errors(tasks.size());
      parallel_for(tasks.size(), data.jobs, [&](std::size_t k) {
        try {
          results[k] = grid_search(std::span<const EvalTask>(&tasks[k], 1), spec, solver.params());
        } catch (const GridSearchError& e) {
          errors[k] = e.what();
        }
      });
      auto table = open_out(fs::path(out) / "grid_table.csv");
      auto best = open_out(fs::path(out) / "best_params.csv");
      table << "cell_id,band,nu,gamma,f1,tp,fp,fn,tn,scored_tasks,failed_tasks\n";
      best << "cell_id,band,nu,gamma,f1\n";
      for (std::size_t k = 0; k < tasks.size(); ++k) {
        const std::string prefix = tasks[k].cell_id + "," + std::to_string(tasks[k].band);
        if (!results[k]) {
          std::cerr << "warning: " << prefix << ": " << errors[k] << '\n';
          continue;
        }
        std::ostringstream rows;
        write_grid_csv(rows, results[k]->table, "", prefix);
        const auto body = rows.str();
        table << body.substr(body.find('\n') + 1);
        best << prefix << ',' << format_number(results[k]->best_nu) << ',' << format_number(results[k]->best_gamma)
             << ',' << format_number(results[k]->best_f1) << '\n';
      }
      std::cout << "per-cell grid search over " << tasks.size() << " task(s) written to " << out << '\n';
    }
    echo_config(cmd, out);
    return 0;
  }
};

// ---------------------------------------------------------------------------
// compare

struct CompareCommand {
  DataOptions data;
  SolverOptions solver;
  GridOptions grid;
  std::string out;
  CLI::App* cmd = nullptr;

  void add_to(CLI::App* c) {
    cmd = c;
    data.add_to(c, true);
    solver.add_to(c);
    grid.add_to(c);
    c->add_option("-o,--out", out, "output directory")->required();
  }

  int run() {
    const auto spec = grid.spec();
    const auto ds = data.load();
    CompareOptions opts;
    opts.task = data.task_options();
    opts.base = solver.params();
    opts.jobs = data.jobs;
    const auto report = compare_methods(ds, data.split_instant(ds), spec, opts, data.min_points);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
    for (const auto& f : report.failures) std::cerr << "failure: " << f << '\n';
    ensure_dir(out);
    {
      auto os = open_out(fs::path(out) / "report.csv");
      write_report_csv(os, report);
    }
    {
      auto os = open_out(fs::path(out) / "summary.txt");
      write_summary_table(os, report);
    }
    write_summary_table(std::cout, report);
    echo_config(cmd, out);
    if (report.rows.empty()) throw DomainError("comparison produced no scored (cell, band) rows");
    return 0;
  }
};

// ---------------------------------------------------------------------------
// export / query

std::vector<CoverageModel> load_models(const std::vector<std::string>& paths) {
  std::vector<fs::path> files;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    } else if (fs::exists(p)) {
      files.push_back(p);
    } else {
      throw UsageError("no such model path: " + p);
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<LoadedBoundary> loaded;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
      throw CorruptPayloadError(f.string() + ": " + e.what());
    }
    loaded.push_back(boundary_from_json(doc));
  }
  try {
    return assemble_models(loaded);
  } catch (const std::invalid_argument& e) {
    throw DomainError(e.what());
  }
}

struct ExportCommand {
  std::vector<std::string> models;
  std::string bbox;
  std::size_t resolution = kDefaultContourResolution;
  std::string out;

  void add_to(CLI::App* c) {
    c->add_option("-m,--models", models, "model files or directories");
    c->add_option("--bbox", bbox, "min_lon,min_lat,max_lon,max_lat (default: support vectors + 10%)");
    c->add_option("--resolution", resolution, "contour grid cells per axis")->capture_default_str()
        ->check(CLI::Range(16, 4096));
    c->add_option("-o,--out", out, "output GeoJSON path (default: stdout)");
  }

  int run() const {
    ExportOptions opts;
    opts.resolution = resolution;
    if (!bbox.empty()) {
      const auto v = parse_list(bbox, "--bbox");
      if (v.size() != 4 || !(v[2] > v[0]) || !(v[3] > v[1])) throw UsageError("--bbox needs min_lon,min_lat,max_lon,max_lat");
      opts.lonlat_bbox = BoundingBox{v[0], v[1], v[2], v[3]};
    }
    auto collection = empty_feature_collection();
    std::vector<std::string> warnings;
    for (const auto& m : load_models(models)) append_features(collection, m, opts, warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    if (out.empty()) {
      std::cout << collection.dump() << '\n';
    } else {
      auto os = open_out(out);
      os << collection.dump() << '\n';
      std::cerr << "wrote " << collection["features"].size() << " feature(s) to " << out << '\n';
    }
    return 0;
  }
};

struct QueryCommand {
  std::vector<std::string> models;
  std::string lon_text, lat_text;
  bool per_cell = false;

  void add_to(CLI::App* c) {
    c->add_option("-m,--models", models, "model files or directories")->required();
    c->add_option("--lon", lon_text, "longitude (deg)")->required();
    c->add_option("--lat", lat_text, "latitude (deg)")->required();
    c->add_flag("--per-cell", per_cell, "print one line per cell");
  }

  int run() const {
    const auto lon = covmap::detail::parse_double(lon_text);
    const auto lat = covmap::detail::parse_double(lat_text);
    if (!lon || !lat || *lon < -180.0 || *lon > 180.0 || *lat < -90.0 || *lat > 90.0)
      throw UsageError("malformed coordinates");
    std::optional<int> best;
    for (const auto& m : load_models(models)) {
      const auto band = highest_band_at_lonlat(m, *lon, *lat);
      if (per_cell) std::cout << m.cell_id << '\t' << (band ? std::string(band_category(*band)) : "none") << '\n';
      if (band && (!best || *band > *best)) best = band;
    }
    if (!per_cell) std::cout << (best ? std::string(band_category(*best)) : "none") << '\n';
    return 0;
  }
};

// ---------------------------------------------------------------------------
// Config files: each `key=value` line becomes `--key value` placed ahead of
// the command-line flags. Keys already given on the command line are skipped.

bool given_on_command_line(const CLI::Option* opt, const std::vector<std::string>& args) {
  for (const auto& a : args) {
    for (const auto& l : opt->get_lnames())
      if (a == "--" + l || a.rfind("--" + l + "=", 0) == 0) return true;
    for (const auto& s : opt->get_snames())
      if (a.rfind("-" + s, 0) == 0 && a.rfind("--", 0) != 0) return true;
  }
  return false;
}

std::vector<std::string> with_config(CLI::App& app, std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.size() < 2) return args;
  auto* sub = app.get_subcommand_no_throw(args[1]);
  if (!sub) return args;
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  std::vector<std::string> extra;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = covmap::detail::trim(line);
    if (text.empty() || text.front() == '#' || text.front() == ';' || text.front() == '[') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw UsageError(path + ":" + std::to_string(line_no) + ": expected key=value");
    const std::string key(covmap::detail::trim(text.substr(0, eq)));
    std::string value(covmap::detail::trim(text.substr(eq + 1)));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    const auto* opt = sub->get_option_no_throw("--" + key);
    if (!opt || key == "config") throw UsageError(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (given_on_command_line(opt, args)) continue;
    if (opt->get_expected_min() == 0) {
      if (value == "true" || value == "1") extra.push_back("--" + key);
      continue;
    }
    extra.push_back("--" + key);
    extra.push_back(value);
  }
  args.insert(args.begin() + 2, extra.begin(), extra.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"covmap: mobile coverage boundaries from crowdsourced measurements"};
  app.require_subcommand(1);

  SynthCommand synth;
  TrainCommand train_cmd;
  GridSearchCommand grid_cmd;
  CompareCommand compare_cmd;
  ExportCommand export_cmd;
  QueryCommand query_cmd;

  auto* c_synth = app.add_subcommand("synth", "generate a synthetic measurement CSV");
  auto* c_train = app.add_subcommand("train", "fit per (cell, band) boundaries");
  auto* c_grid = app.add_subcommand("grid-search", "(nu, gamma) search on a temporal split");
  auto* c_compare = app.add_subcommand("compare", "hull vs one-class SVM F1 per band");
  auto* c_export = app.add_subcommand("export", "write boundaries as GeoJSON");
  auto* c_query = app.add_subcommand("query", "highest band at a location");
  synth.add_to(c_synth);
  train_cmd.add_to(c_train);
  grid_cmd.add_to(c_grid);
  compare_cmd.add_to(c_compare);
  export_cmd.add_to(c_export);
  query_cmd.add_to(c_query);
  std::string config_path;
  for (auto* sub : app.get_subcommands({}))
    sub->add_option("--config", config_path, "key=value file of long option names; flags override it");

  std::vector<std::string> args;
  try {
    args = with_config(app, std::vector<std::string>(argv, argv + argc));
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  std::vector<char*> cargs;
  for (auto& a : args) cargs.push_back(a.data());

  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (c_synth->parsed()) return synth.run();
    if (c_train->parsed()) return train_cmd.run();
    if (c_grid->parsed()) return grid_cmd.run();
    if (c_compare->parsed()) return compare_cmd.run();
    if (c_export->parsed()) return export_cmd.run();
    if (c_query->parsed()) return query_cmd.run();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
