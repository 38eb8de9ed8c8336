#include "spde/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <thread>

#include "json.hpp"

#include "spde/errors.hpp"
#include "spde/io.hpp"

namespace spde {

using ordered_json = nlohmann::ordered_json;

namespace {

Coefficients build_coefficients(const ExperimentConfig& cfg) {
  Coefficients co = Coefficients::preset(cfg.preset, cfg.problem.d);
  if (cfg.xi_scale != 1.0) {
    auto base = co.xi;
    const double s = cfg.xi_scale;
    co.xi = [base, s](double t, const double* x) { return s * base(t, x); };
  }
  return co;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (name.empty()) throw invalid_spec("config: name must not be empty");
  problem.validate();
  grid.validate();
  diffusion.validate();
  if (problem.d != grid.d)
    throw invalid_spec("config: problem dimension != grid dimension");
  if (diffusion.lambda != problem.lambda)
    throw invalid_spec("config: diffusion lambda out of sync with problem");
  if (!(T > 0.0) || !(dt > 0.0)) throw invalid_spec("config: T and dt must be positive");
  if (!(dt < T)) throw invalid_spec("config: dt must be smaller than T");
  const long long nsteps = std::llround(T / dt);
  if (nsteps < 1 || std::abs(double(nsteps) * dt - T) > 1e-9 * std::max(T, 1.0))
    throw invalid_spec("config: T must be an integer multiple of dt");
  if (paths < 1) throw invalid_spec("config: paths must be >= 1");
  if (record_every < 1) throw invalid_spec("config: record_every must be >= 1");
  if (threads < 1 || threads > 64)
    throw invalid_spec("config: threads must be in 1..64");
  if (u0_kind != "constant" && u0_kind != "bump" && u0_kind != "sine")
    throw invalid_spec("config: initial kind must be constant|bump|sine");
  if (!std::isfinite(u0_amplitude))
    throw invalid_spec("config: initial amplitude must be finite");
  if (!(u0_width > 0.0)) throw invalid_spec("config: initial width must be positive");
  if (!(xi_scale >= 0.0) || !std::isfinite(xi_scale))
    throw invalid_spec("config: xi_scale must be finite and >= 0");
  for (double r : thresholds)
    if (!(r > 0.0)) throw invalid_spec("config: thresholds must be positive");
  for (double ts : snapshot_times)
    if (!(ts >= 0.0) || ts > T * (1.0 + 1e-12))
      throw invalid_spec("config: snapshot times must lie in [0, T]");
  if (probe_count < 0 || std::size_t(probe_count) > grid.cells())
    throw invalid_spec("config: probes out of range");
  if (format != "csv" && format != "json")
    throw invalid_spec("config: format must be csv or json");
  if (!(epsilon > 0.0)) throw invalid_spec("config: epsilon must be positive");
  if (!(tolerance >= 0.0)) throw invalid_spec("config: tolerance must be >= 0");
}

std::vector<double> make_initial_condition(const GridSpec& g,
                                           const std::string& kind,
                                           double amplitude, double width) {
  g.validate();
  if (!(width > 0.0)) throw invalid_spec("initial width must be positive");
  std::vector<double> u(g.cells());
  if (kind == "constant") {
    std::fill(u.begin(), u.end(), amplitude);
    return u;
  }
  if (kind == "bump") {
    for (std::size_t f = 0; f < u.size(); ++f) {
      const auto idx = g.unflatten(f);
      double r2 = 0.0;
      for (int i = 0; i < g.d; ++i) {
        const double x = g.coord_centered(idx[i]);
        r2 += x * x;
      }
      u[f] = amplitude * std::exp(-r2 / (2.0 * width * width));
    }
    return u;
  }
  if (kind == "sine") {
    for (std::size_t f = 0; f < u.size(); ++f) {
      const auto idx = g.unflatten(f);
      const double x = g.coord(idx[0]);
      u[f] = amplitude * 0.5 * (1.0 + std::sin(2.0 * M_PI * x / g.L));
    }
    return u;
  }
  throw invalid_spec("unknown initial condition kind: " + kind);
}

std::vector<std::size_t> default_probe_cells(const GridSpec& g, int count) {
  if (count <= 0) return {};
  count = std::min(count, g.n);
  std::vector<std::size_t> cells;
  cells.reserve(std::size_t(count));
  for (int k = 0; k < count; ++k) {
    const int j = int((std::size_t(g.n) * (2 * std::size_t(k) + 1)) /
                      (2 * std::size_t(count)));
    std::array<int, 3> idx{0, 0, 0};
    for (int a = 0; a < g.d; ++a) idx[a] = j;  // main diagonal
    cells.push_back(g.flatten(idx));
  }
  return cells;
}

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "name",
      "problem.d", "problem.lambda", "problem.gamma", "problem.p",
      "covariance.model", "covariance.alpha", "covariance.rate",
      "grid.n", "grid.L",
      "time.T", "time.dt", "time.record_every",
      "coefficients.preset", "coefficients.xi_scale",
      "diffusion.m",
      "initial.kind", "initial.amplitude", "initial.width",
      "runs.paths", "runs.seed", "runs.threads",
      "monitors.thresholds", "monitors.thresholds_rel",
      "monitors.snapshot_times", "monitors.probes", "monitors.bessel_gamma",
      "output.dir", "output.format",
      "regularity.epsilon", "regularity.tolerance",
  };
  return keys;
}

}  // namespace

ExperimentConfig config_from_toml(const TomlTable& t) {
  for (const auto& key : t.keys())
    if (!known_keys().count(key))
      throw invalid_spec("config line " + std::to_string(t.at(key).line) +
                         ": unknown key '" + key + "'");

  ExperimentConfig cfg;
  cfg.name = t.get_string_or("name", "experiment");

  cfg.problem.d = int(t.get_integer_or("problem.d", 1));
  cfg.problem.lambda = t.get_number_or("problem.lambda", 0.0);
  cfg.problem.gamma = t.get_number_or("problem.gamma", 0.25);
  cfg.problem.p = t.get_number_or("problem.p", 16.0);

  const std::string model = t.get_string_or("covariance.model", "white");
  if (model == "white") {
    cfg.problem.cov = CovarianceModel::white(cfg.problem.d);
  } else if (model == "riesz") {
    if (!t.has("covariance.alpha"))
      throw invalid_spec("config: covariance.alpha is required for riesz");
    cfg.problem.cov =
        CovarianceModel::riesz(cfg.problem.d, t.get_number("covariance.alpha"));
  } else if (model == "gaussian") {
    cfg.problem.cov = CovarianceModel::gaussian(
        cfg.problem.d, t.get_number_or("covariance.rate", 1.0));
  } else {
    throw invalid_spec("config: covariance.model must be white|riesz|gaussian");
  }

  cfg.grid.d = cfg.problem.d;
  cfg.grid.n = int(t.get_integer_or("grid.n", 64));
  cfg.grid.L = t.get_number_or("grid.L", 8.0);

  cfg.T = t.get_number_or("time.T", 0.01);
  cfg.dt = t.get_number_or("time.dt", 1e-4);
  cfg.record_every = int(t.get_integer_or("time.record_every", 1));

  cfg.preset = t.get_string_or("coefficients.preset", "heat");
  cfg.xi_scale = t.get_number_or("coefficients.xi_scale", 1.0);

  cfg.diffusion.lambda = cfg.problem.lambda;
  cfg.diffusion.m = t.get_number_or("diffusion.m", 1e6);

  cfg.u0_kind = t.get_string_or("initial.kind", "bump");
  cfg.u0_amplitude = t.get_number_or("initial.amplitude", 1.0);
  cfg.u0_width = t.get_number_or("initial.width", 1.0);

  cfg.paths = int(t.get_integer_or("runs.paths", 1));
  cfg.seed = std::uint64_t(t.get_integer_or("runs.seed", 1));
  cfg.threads = int(t.get_integer_or("runs.threads", 1));

  cfg.thresholds = t.get_number_array_or("monitors.thresholds", {});
  for (double rel : t.get_number_array_or("monitors.thresholds_rel", {}))
    cfg.thresholds.push_back(rel * std::abs(cfg.u0_amplitude));
  cfg.snapshot_times = t.get_number_array_or("monitors.snapshot_times", {});
  cfg.probe_count = int(t.get_integer_or("monitors.probes", 0));
  if (t.has("monitors.bessel_gamma"))
    cfg.bessel_gamma = t.get_number("monitors.bessel_gamma");

  cfg.out_dir = t.get_string_or("output.dir", "");
  cfg.format = t.get_string_or("output.format", "csv");

  cfg.epsilon = t.get_number_or("regularity.epsilon", 0.05);
  cfg.tolerance = t.get_number_or("regularity.tolerance", 0.0);

  cfg.validate();
  cfg.admissibility = check_admissible(cfg.problem);
  cfg.assumptions =
      check_assumptions(build_coefficients(cfg), cfg.grid, cfg.T);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  return config_from_toml(parse_toml_file(path));
}

// ---------------------------------------------------------------------------
// experiment driver

namespace {

std::vector<int> auto_lags(int lo, int hi, int max_count) {
  std::vector<int> lags;
  if (hi < lo) return lags;
  double v = lo;
  const double ratio =
      max_count > 1 ? std::pow(double(hi) / double(lo),
                               1.0 / double(max_count - 1))
                    : 2.0;
  int prev = 0;
  for (int k = 0; k < max_count; ++k) {
    int l = int(std::lround(v));
    if (l <= prev) l = prev + 1;
    if (l > hi) break;
    lags.push_back(l);
    prev = l;
    v *= ratio;
  }
  return lags;
}

ordered_json config_echo(const ExperimentConfig& cfg) {
  ordered_json j;
  j["name"] = cfg.name;
  j["problem"] = {{"d", cfg.problem.d},
                  {"lambda", cfg.problem.lambda},
                  {"gamma", cfg.problem.gamma},
                  {"p", cfg.problem.p}};
  ordered_json cov;
  cov["model"] = cfg.problem.cov.name();
  if (cfg.problem.cov.kind == CovKind::riesz) cov["alpha"] = cfg.problem.cov.alpha;
  if (cfg.problem.cov.kind == CovKind::gaussian) cov["rate"] = cfg.problem.cov.rate;
  j["covariance"] = cov;
  j["grid"] = {{"d", cfg.grid.d}, {"n", cfg.grid.n}, {"L", cfg.grid.L}};
  j["time"] = {{"T", cfg.T}, {"dt", cfg.dt}, {"record_every", cfg.record_every}};
  j["coefficients"] = {{"preset", cfg.preset}, {"xi_scale", cfg.xi_scale}};
  j["diffusion"] = {{"lambda", cfg.diffusion.lambda}, {"m", cfg.diffusion.m}};
  j["initial"] = {{"kind", cfg.u0_kind},
                  {"amplitude", cfg.u0_amplitude},
                  {"width", cfg.u0_width}};
  j["runs"] = {{"paths", cfg.paths}, {"seed", cfg.seed}, {"threads", cfg.threads}};
  j["monitors"] = {{"thresholds", cfg.thresholds},
                   {"snapshot_times", cfg.snapshot_times},
                   {"probes", cfg.probe_count}};
  if (cfg.bessel_gamma) j["monitors"]["bessel_gamma"] = *cfg.bessel_gamma;
  j["output"] = {{"format", cfg.format}};
  j["regularity"] = {{"epsilon", cfg.epsilon}, {"tolerance", cfg.tolerance}};
  j["admissible"] = cfg.admissibility.admissible;
  j["admissibility_condition"] = condition_name(cfg.admissibility.matched);
  return j;
}

ordered_json regularity_json(const RegularityReport& rep) {
  ordered_json j;
  j["verdict"] = rep.verdict;
  j["target_space"] = rep.target_space;
  j["target_time"] = rep.target_time;
  j["epsilon"] = rep.epsilon;
  j["tolerance"] = rep.tolerance;
  if (rep.has_space)
    j["space"] = {{"exponent", rep.space_exponent},
                  {"ci_lo", rep.space_ci_lo},
                  {"ci_hi", rep.space_ci_hi}};
  if (rep.has_time)
    j["time"] = {{"exponent", rep.time_exponent},
                 {"ci_lo", rep.time_ci_lo},
                 {"ci_hi", rep.time_ci_hi}};
  return j;
}

double json_safe(double v) { return v; }  // nlohmann maps non-finite to null

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();

  int threads = cfg.threads;
  if (const char* env = std::getenv("THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 1 && v <= 64) threads = int(v);
  }

  const Coefficients coeffs = build_coefficients(cfg);
  const std::vector<double> u0 =
      make_initial_condition(cfg.grid, cfg.u0_kind, cfg.u0_amplitude,
                             cfg.u0_width);
  const NoiseSampler sampler =
      NoiseSampler::build(SpectralMeasure::for_model(cfg.problem.cov), cfg.grid);

  MonitorSpec mon;
  mon.record_every = cfg.record_every;
  mon.thresholds = cfg.thresholds;
  mon.snapshot_times = cfg.snapshot_times;
  mon.probe_cells = default_probe_cells(cfg.grid, cfg.probe_count);
  mon.bessel_gamma = cfg.bessel_gamma;

  ExperimentOutput out;
  out.records.resize(std::size_t(cfg.paths));
  std::vector<std::string> errors(std::size_t(cfg.paths));
  std::vector<double> path_seconds(std::size_t(cfg.paths), 0.0);

  std::atomic<int> next{0};
  auto worker = [&]() {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= cfg.paths) return;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        out.records[std::size_t(i)] =
            run_path(coeffs, cfg.diffusion, sampler, u0, cfg.T, cfg.dt,
                     cfg.seed, std::uint64_t(i), mon);
      } catch (const std::exception& e) {
        errors[std::size_t(i)] = e.what();
      }
      path_seconds[std::size_t(i)] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
    }
  };
  if (threads == 1 || cfg.paths == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int nw = std::min(threads, cfg.paths);
    pool.reserve(std::size_t(nw));
    for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // path-ordered aggregation
  int completed = 0;
  for (int i = 0; i < cfg.paths; ++i) {
    if (!errors[std::size_t(i)].empty()) {
      out.failed_paths.push_back(i);
      continue;
    }
    ++completed;
    if (out.records[std::size_t(i)].blew_up) ++out.blowups;
  }
  if (completed == 0) {
    std::string first;
    for (const auto& e : errors)
      if (!e.empty()) { first = e; break; }
    throw numeric_error("all paths failed; first error: " + first);
  }

  out.tau_hit_fraction.assign(cfg.thresholds.size(), 0.0);
  for (int i = 0; i < cfg.paths; ++i) {
    if (!errors[std::size_t(i)].empty()) continue;
    const auto& rec = out.records[std::size_t(i)];
    for (std::size_t k = 0; k < rec.tau_hit.size(); ++k)
      if (!std::isnan(rec.tau_hit[k]))
        out.tau_hit_fraction[k] += 1.0 / double(completed);
  }

  {
    std::vector<TrajectoryRecord> done;
    for (int i = 0; i < cfg.paths; ++i)
      if (errors[std::size_t(i)].empty() &&
          !out.records[std::size_t(i)].blew_up)
        done.push_back(out.records[std::size_t(i)]);
    if (done.size() >= 2) {
      out.mass_stat = mass_martingale_stat(done);
      out.mass_stat_valid = true;
    }
  }

  // regularity report from snapshots (space) and probes (time)
  std::string regularity_error;
  try {
    std::vector<StructureFunction> space_sfs, time_sfs;
    if (!cfg.snapshot_times.empty()) {
      const auto lags = auto_lags(4, cfg.grid.n / 8, 8);
      for (int i = 0; lags.size() >= 5 && i < cfg.paths; ++i) {
        if (!errors[std::size_t(i)].empty()) continue;
        const auto& rec = out.records[std::size_t(i)];
        std::vector<std::vector<double>> fields;
        for (const auto& snap : rec.snapshots)
          if (snap.t > 0.0) fields.push_back(snap.u);
        if (fields.empty()) continue;
        space_sfs.push_back(
            structure_function_space(cfg.grid, fields, lags, 2.0));
      }
    }
    if (cfg.probe_count > 0) {
      for (int i = 0; i < cfg.paths; ++i) {
        if (!errors[std::size_t(i)].empty()) continue;
        const auto& rec = out.records[std::size_t(i)];
        if (rec.probes.empty() || rec.times.size() < 64) continue;
        const std::size_t start = rec.times.size() / 2;
        const std::size_t usable = rec.times.size() - start;
        const auto lags = auto_lags(4, int(usable / 8), 8);
        if (lags.size() < 5) continue;
        const double dt_sample = cfg.dt * cfg.record_every;
        time_sfs.push_back(structure_function_time(rec.probes, dt_sample, lags,
                                                   2.0, start));
      }
    }
    if (!space_sfs.empty() || !time_sfs.empty()) {
      HolderEstimate space_est, time_est;
      if (!space_sfs.empty()) space_est = estimate_holder(space_sfs);
      if (!time_sfs.empty()) time_est = estimate_holder(time_sfs);
      out.regularity = compare_to_theory(
          space_sfs.empty() ? nullptr : &space_est,
          time_sfs.empty() ? nullptr : &time_est, cfg.problem, cfg.epsilon,
          cfg.tolerance);
    }
  } catch (const std::exception& e) {
    regularity_error = e.what();
  }

  // ---- artifacts
  std::vector<std::pair<std::string, std::string>> artifacts;  // name, bytes
  const bool json_fmt = cfg.format == "json";

  for (int i = 0; i < cfg.paths; ++i) {
    if (!errors[std::size_t(i)].empty()) continue;
    const auto& rec = out.records[std::size_t(i)];
    char buf[32];
    std::snprintf(buf, sizeof(buf), "path_%04d", i);
    const bool with_bessel = !rec.bessel_norm.empty();
    if (json_fmt) {
      ordered_json j;
      j["path"] = i;
      j["t"] = rec.times;
      j["sup_norm"] = rec.sup_norm;
      j["l1_mass"] = rec.l1_mass;
      j["mass"] = rec.mass;
      j["min_value"] = rec.min_value;
      if (with_bessel) j["bessel_norm"] = rec.bessel_norm;
      artifacts.emplace_back(std::string(buf) + ".json", j.dump(2) + "\n");
    } else {
      std::vector<std::string> cols = {"t", "sup_norm", "l1_mass", "mass",
                                       "min_value"};
      if (with_bessel) cols.push_back("bessel_norm");
      std::vector<std::vector<double>> rows;
      rows.reserve(rec.times.size());
      for (std::size_t r = 0; r < rec.times.size(); ++r) {
        std::vector<double> row = {rec.times[r], rec.sup_norm[r],
                                   rec.l1_mass[r], rec.mass[r],
                                   rec.min_value[r]};
        if (with_bessel) row.push_back(rec.bessel_norm[r]);
        rows.push_back(std::move(row));
      }
      artifacts.emplace_back(std::string(buf) + ".csv",
                             csv_table(cols, rows));
    }
    if (!rec.probes.empty()) {
      std::vector<std::string> cols = {"t"};
      for (std::size_t p = 0; p < rec.probe_cells.size(); ++p)
        cols.push_back("cell_" + std::to_string(rec.probe_cells[p]));
      std::vector<std::vector<double>> rows;
      rows.reserve(rec.times.size());
      for (std::size_t r = 0; r < rec.times.size(); ++r) {
        std::vector<double> row = {rec.times[r]};
        for (const auto& series : rec.probes) row.push_back(series[r]);
        rows.push_back(std::move(row));
      }
      artifacts.emplace_back("probes_" + std::string(buf).substr(5) + ".csv",
                             csv_table(cols, rows));
    }
  }

  if (!cfg.thresholds.empty()) {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < cfg.paths; ++i) {
      if (!errors[std::size_t(i)].empty()) continue;
      const auto& rec = out.records[std::size_t(i)];
      for (std::size_t k = 0; k < rec.thresholds.size(); ++k)
        rows.push_back({double(i), rec.thresholds[k], rec.tau_hit[k]});
    }
    artifacts.emplace_back("tau.csv",
                           csv_table({"path", "threshold", "tau"}, rows));
  }

  if (!cfg.snapshot_times.empty()) {
    std::string payload;
    ordered_json index;
    index["grid"] = {{"d", cfg.grid.d}, {"n", cfg.grid.n}, {"L", cfg.grid.L}};
    index["cells"] = cfg.grid.cells();
    index["entries"] = ordered_json::array();
    std::size_t field_no = 0;
    for (int i = 0; i < cfg.paths; ++i) {
      if (!errors[std::size_t(i)].empty()) continue;
      const auto& rec = out.records[std::size_t(i)];
      for (const auto& snap : rec.snapshots) {
        payload += f64_bytes(snap.u);
        index["entries"].push_back(
            {{"path", i}, {"t", snap.t}, {"field", field_no}});
        ++field_no;
      }
    }
    artifacts.emplace_back("snapshots.bin", std::move(payload));
    artifacts.emplace_back("snapshots.json", index.dump(2) + "\n");
  }

  {
    ordered_json agg;
    agg["paths"] = cfg.paths;
    agg["completed"] = completed;
    agg["failed"] = out.failed_paths;
    agg["blowups"] = out.blowups;
    if (out.mass_stat_valid) {
      agg["mass"] = {{"mean_drift", json_safe(out.mass_stat.mean)},
                     {"se", json_safe(out.mass_stat.se)},
                     {"z", json_safe(out.mass_stat.z)},
                     {"n", out.mass_stat.n}};
    } else {
      agg["mass"] = nullptr;
    }
    agg["tau"] = {{"thresholds", cfg.thresholds},
                  {"hit_fraction", out.tau_hit_fraction}};
    agg["regularity"] =
        out.regularity ? regularity_json(*out.regularity) : ordered_json();
    if (!regularity_error.empty()) agg["regularity_error"] = regularity_error;
    artifacts.emplace_back("aggregate.json", agg.dump(2) + "\n");
  }

  if (out.regularity)
    artifacts.emplace_back("regularity.json",
                           regularity_json(*out.regularity).dump(2) + "\n");

  // ---- manifest
  ordered_json manifest;
  manifest["name"] = cfg.name;
  manifest["config"] = config_echo(cfg);
  manifest["paths"] = ordered_json::array();
  for (int i = 0; i < cfg.paths; ++i) {
    ordered_json p;
    p["path"] = i;
    p["stream"] = i;
    p["seed"] = derive_stream_seed(cfg.seed, std::uint64_t(i));
    if (!errors[std::size_t(i)].empty()) p["error"] = errors[std::size_t(i)];
    manifest["paths"].push_back(p);
  }
  manifest["artifacts"] = ordered_json::array();
  for (const auto& [name, bytes] : artifacts) {
    ManifestEntry entry;
    entry.name = name;
    entry.bytes = bytes.size();
    entry.fnv1a64 = hash_hex(fnv1a64(bytes));
    out.manifest.artifacts.push_back(entry);
    manifest["artifacts"].push_back({{"name", entry.name},
                                     {"bytes", entry.bytes},
                                     {"fnv1a64", entry.fnv1a64}});
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  manifest["timings"] = {{"wall_s", wall}, {"per_path_s", path_seconds},
                         {"threads_used", threads}};
  out.manifest.json = manifest.dump(2) + "\n";

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    for (const auto& [name, bytes] : artifacts)
      write_text_file(cfg.out_dir + "/" + name, bytes);
    write_text_file(cfg.out_dir + "/manifest.json", out.manifest.json);
  }
  return out;
}

}  // namespace spde
