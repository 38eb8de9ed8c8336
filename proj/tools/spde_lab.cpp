// Command line surface: admissibility oracle, kernel verification, noise
// sampling, experiment runner, regularity estimation, and report rendering.
// Exit codes: 0 success, 1 usage, 2 config, 3 numeric failure, 4 check
// failure.

#include <cstdio>
#include <cmath>
#include <filesystem>
#include <map>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "spde/checks.hpp"
#include "spde/covariance.hpp"
#include "spde/harness.hpp"
#include "spde/io.hpp"
#include "spde/noise.hpp"
#include "spde/regularity.hpp"
#include "spde/solvability.hpp"

namespace {

using nlohmann::ordered_json;
using namespace spde;

constexpr int kOk = 0, kUsage = 1, kConfig = 2, kNumeric = 3, kCheck = 4;

struct GlobalOpts {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  std::string format = "csv";
  int threads = 0;
  bool force = false;
};

CovarianceModel model_from_flags(const std::string& cov, int d, double alpha,
                                 double rate) {
  if (cov == "white") return CovarianceModel::white(d);
  if (cov == "riesz") return CovarianceModel::riesz(d, alpha);
  if (cov == "gaussian") return CovarianceModel::gaussian(d, rate);
  throw invalid_spec("--cov must be white|riesz|gaussian");
}

std::string fnum(double v) { return format_double(v); }

// ---- admissible -----------------------------------------------------------

int run_admissible(const ProblemSpec& spec, const GlobalOpts& g) {
  const AdmissibilityReport rep = check_admissible(spec);
  if (g.format == "json") {
    ordered_json j;
    j["admissible"] = rep.admissible;
    j["condition"] = condition_name(rep.matched);
    std::vector<std::string> all;
    for (auto c : rep.all_matched) all.push_back(condition_name(c));
    j["all_conditions"] = all;
    j["gamma0"] = rep.gamma0;
    j["gamma1"] = rep.gamma1;
    j["gamma_star"] = rep.gamma_star;
    j["p_min"] = rep.p_min;
    j["s_heuristic"] = rep.s_heuristic;
    if (rep.admissible) {
      j["holder_window"] = {{"alpha_lo", rep.window.alpha_lo},
                            {"alpha_hi", rep.window.alpha_hi},
                            {"beta_lo", rep.window.beta_lo},
                            {"beta_hi", rep.window.beta_hi},
                            {"delta_max", rep.window.delta_max},
                            {"empty", rep.window.empty}};
    } else {
      j["rejection_reason"] = rep.rejection_reason;
    }
    std::cout << j.dump(2) << "\n";
    return kOk;
  }
  std::cout << "admissible:  " << (rep.admissible ? "yes" : "no") << "\n"
            << "condition:   " << condition_name(rep.matched) << "\n"
            << "gamma0:      " << fnum(rep.gamma0) << "\n"
            << "gamma1:      " << fnum(rep.gamma1) << "\n"
            << "gamma_star:  " << fnum(rep.gamma_star) << "\n"
            << "p_min:       " << fnum(rep.p_min) << "\n";
  if (rep.admissible) {
    std::cout << "exponent window: 1/p < alpha < beta < gamma/2 - d/(2p): ("
              << fnum(rep.window.alpha_lo) << ", " << fnum(rep.window.alpha_hi)
              << "), delta < " << fnum(rep.window.delta_max) << "\n";
  } else {
    std::cout << "reason:      " << rep.rejection_reason << "\n";
  }
  return kOk;
}

// ---- verify-kernels -------------------------------------------------------

int print_results(const std::vector<CheckResult>& rs) {
  int failed = 0;
  for (const auto& r : rs) {
    std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  ["
              << r.detail << "]\n";
    if (!r.pass) ++failed;
  }
  return failed;
}

int run_verify_kernels(bool with_noise) {
  int failed = 0;
  failed += print_results(check_bessel_closed_forms());
  failed += print_results(check_bessel_fourier_identity());
  failed += print_results(check_convolution_envelopes());
  if (with_noise) failed += print_results(check_noise_covariance());
  std::cout << (failed == 0 ? "all kernel checks passed\n"
                            : "kernel checks FAILED\n");
  return failed == 0 ? kOk : kCheck;
}

// ---- sample-noise ---------------------------------------------------------

int run_sample_noise(const CovarianceModel& model, int n, double L, double dt,
                     int count, const GlobalOpts& g) {
  GridSpec grid{model.d, n, L};
  const auto sampler =
      NoiseSampler::build(SpectralMeasure::for_model(model), grid);
  const std::uint64_t seed = g.seed_set ? g.seed : 1;

  SamplerWorkspace ws(grid);
  RngStream rng(seed, 0);
  std::vector<NoiseIncrement> incs{std::size_t(count)};
  for (int s = 0; s < count; ++s) {
    incs[std::size_t(s)].grid = grid;
    incs[std::size_t(s)].dt = dt;
    incs[std::size_t(s)].seed = seed;
    sampler.sample_into(dt, rng, ws, incs[std::size_t(s)].values);
  }

  std::vector<int> lags{}; lags.resize(std::size_t(grid.n / 2 + 1));
  for (int h = 0; h <= grid.n / 2; ++h) lags[std::size_t(h)] = h;
  const CovarianceEstimate est = empirical_covariance(incs, lags);

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < est.lags.size(); ++i)
    rows.push_back({double(est.lags[i]), est.lags[i] * grid.spacing(),
                    est.value[i], est.se[i],
                    dt * implied_covariance(sampler, est.lags[i])});
  const std::string cov_csv = csv_table(
      {"lag_cells", "lag_x", "empirical", "se", "implied"}, rows);

  std::vector<std::vector<double>> field;
  for (std::size_t j = 0; j < grid.cells(); ++j) {
    const auto idx = grid.unflatten(j);
    field.push_back({double(j), grid.coord_centered(idx[0]),
                     incs[0].values[j]});
  }
  const std::string field_csv =
      csv_table({"cell", "x1", "value"}, field);

  const std::string dir = g.out_dir.empty() ? "noise_out" : g.out_dir;
  std::filesystem::create_directories(dir);
  write_text_file(dir + "/covariance.csv", cov_csv);
  write_text_file(dir + "/increment_0000.csv", field_csv);
  std::cout << "wrote " << dir << "/covariance.csv and " << dir
            << "/increment_0000.csv (" << count << " increments, clamped mass "
            << fnum(sampler.clamped_mass_fraction()) << ")\n";
  return kOk;
}

// ---- simulate -------------------------------------------------------------

int run_simulate(const std::string& config_path, const GlobalOpts& g) {
  ExperimentConfig cfg = load_config(config_path);
  if (g.seed_set) cfg.seed = g.seed;
  if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
  if (g.threads > 0) cfg.threads = g.threads;
  if (g.format == "json") cfg.format = "json";

  if (!cfg.admissibility.admissible && !g.force) {
    std::cerr << "config is not admissible: "
              << cfg.admissibility.rejection_reason
              << " (use --force to run anyway)\n";
    return kConfig;
  }
  if (!cfg.assumptions.ok && !g.force) {
    std::cerr << "coefficient assumptions fail: " << cfg.assumptions.message
              << " (use --force to run anyway)\n";
    return kConfig;
  }

  const ExperimentOutput out = run_experiment(cfg);
  std::cout << "experiment " << cfg.name << ": " << cfg.paths << " paths, "
            << out.failed_paths.size() << " failed, " << out.blowups
            << " blow-ups\n";
  if (out.mass_stat_valid)
    std::cout << "mass drift z = " << fnum(out.mass_stat.z) << " over "
              << out.mass_stat.n << " paths\n";
  if (out.regularity)
    std::cout << "regularity verdict: " << out.regularity->verdict << "\n";
  if (!cfg.out_dir.empty())
    std::cout << "artifacts under " << cfg.out_dir << " ("
              << out.manifest.artifacts.size() << " files + manifest.json)\n";
  return kOk;
}

// ---- estimate-holder ------------------------------------------------------

std::vector<int> auto_lags(int lo, int hi, int max_count) {
  std::vector<int> lags;
  if (hi < lo) return lags;
  double v = lo;
  const double ratio = max_count > 1
                           ? std::pow(double(hi) / double(lo),
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

std::vector<std::vector<double>> parse_csv_columns(const std::string& text) {
  std::vector<std::vector<double>> cols;
  std::size_t pos = text.find('\n');  // skip header
  if (pos == std::string::npos) return cols;
  ++pos;
  std::vector<double> row;
  while (pos < text.size()) {
    std::size_t end = text.find_first_of(",\n", pos);
    if (end == std::string::npos) end = text.size();
    row.push_back(std::stod(text.substr(pos, end - pos)));
    if (end >= text.size() || text[end] == '\n') {
      if (cols.empty()) cols.resize(row.size());
      if (cols.size() != row.size())
        throw invalid_spec("ragged csv row");
      for (std::size_t c = 0; c < row.size(); ++c) cols[c].push_back(row[c]);
      row.clear();
    }
    pos = end + 1;
  }
  return cols;
}

int run_estimate_holder(const std::string& dir, double q, const GlobalOpts& g) {
  const ordered_json manifest =
      ordered_json::parse(read_text_file(dir + "/manifest.json"));
  const auto& cj = manifest.at("config");
  ProblemSpec spec;
  spec.d = cj.at("problem").at("d").get<int>();
  spec.lambda = cj.at("problem").at("lambda").get<double>();
  spec.gamma = cj.at("problem").at("gamma").get<double>();
  spec.p = cj.at("problem").at("p").get<double>();
  const std::string model = cj.at("covariance").at("model").get<std::string>();
  spec.cov = model_from_flags(
      model, spec.d,
      cj.at("covariance").value("alpha", 0.5),
      cj.at("covariance").value("rate", 1.0));
  const double epsilon = cj.at("regularity").at("epsilon").get<double>();
  const double tolerance = cj.at("regularity").at("tolerance").get<double>();
  GridSpec grid{spec.d, cj.at("grid").at("n").get<int>(),
                cj.at("grid").at("L").get<double>()};
  const double dt = cj.at("time").at("dt").get<double>();
  const int record_every = cj.at("time").at("record_every").get<int>();

  std::vector<StructureFunction> space_sfs, time_sfs;

  if (std::filesystem::exists(dir + "/snapshots.json")) {
    const ordered_json index =
        ordered_json::parse(read_text_file(dir + "/snapshots.json"));
    const std::vector<double> all =
        f64_from_bytes(read_text_file(dir + "/snapshots.bin"));
    const std::size_t cells = index.at("cells").get<std::size_t>();
    const auto lags = auto_lags(4, grid.n / 8, 8);
    std::map<int, std::vector<std::vector<double>>> by_path;
    for (const auto& e : index.at("entries")) {
      if (e.at("t").get<double>() <= 0.0) continue;
      const std::size_t off = e.at("field").get<std::size_t>() * cells;
      if (off + cells > all.size())
        throw invalid_spec("snapshots.bin is shorter than snapshots.json");
      by_path[e.at("path").get<int>()].emplace_back(
          all.begin() + long(off), all.begin() + long(off + cells));
    }
    if (lags.size() >= 5)
      for (const auto& [p, fields] : by_path)
        space_sfs.push_back(structure_function_space(grid, fields, lags, q));
  }

  for (int i = 0; i < 100000; ++i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s/probes_%04d.csv", dir.c_str(), i);
    if (!std::filesystem::exists(buf)) break;
    auto cols = parse_csv_columns(read_text_file(buf));
    if (cols.size() < 2 || cols[0].size() < 64) continue;
    std::vector<std::vector<double>> series(cols.begin() + 1, cols.end());
    const std::size_t start = series[0].size() / 2;
    const auto lags = auto_lags(4, int((series[0].size() - start) / 8), 8);
    if (lags.size() < 5) continue;
    time_sfs.push_back(
        structure_function_time(series, dt * record_every, lags, q, start));
  }

  if (space_sfs.empty() && time_sfs.empty()) {
    std::cerr << "no snapshots or probe series under " << dir << "\n";
    return kConfig;
  }

  HolderEstimate space_est, time_est;
  if (!space_sfs.empty()) space_est = estimate_holder(space_sfs);
  if (!time_sfs.empty()) time_est = estimate_holder(time_sfs);
  const RegularityReport rep = compare_to_theory(
      space_sfs.empty() ? nullptr : &space_est,
      time_sfs.empty() ? nullptr : &time_est, spec, epsilon, tolerance);

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
  const std::string out = j.dump(2) + "\n";
  const std::string target_dir = g.out_dir.empty() ? dir : g.out_dir;
  std::filesystem::create_directories(target_dir);
  write_text_file(target_dir + "/regularity.json", out);
  std::cout << out;
  return kOk;
}

// ---- report ---------------------------------------------------------------

std::string svg_polyline(const std::vector<double>& xs,
                         const std::vector<double>& ys, double x0, double x1,
                         double y0, double y1, const char* color) {
  std::string pts;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double px = 60 + 700 * (xs[i] - x0) / (x1 - x0 + 1e-300);
    const double py = 420 - 380 * (ys[i] - y0) / (y1 - y0 + 1e-300);
    pts += fnum(px) + "," + fnum(py) + " ";
  }
  return std::string("<polyline fill=\"none\" stroke=\"") + color +
         "\" stroke-width=\"1\" points=\"" + pts + "\"/>\n";
}

int run_report(const std::string& dir, bool svg) {
  const ordered_json manifest =
      ordered_json::parse(read_text_file(dir + "/manifest.json"));
  const ordered_json agg =
      ordered_json::parse(read_text_file(dir + "/aggregate.json"));
  std::cout << "experiment: " << manifest.at("name").get<std::string>() << "\n"
            << "paths:      " << agg.at("paths") << " (completed "
            << agg.at("completed") << ", blow-ups " << agg.at("blowups")
            << ")\n";
  if (!agg.at("mass").is_null())
    std::cout << "mass drift: mean " << agg.at("mass").at("mean_drift")
              << ", z " << agg.at("mass").at("z") << "\n";
  const auto& tau = agg.at("tau");
  if (!tau.at("thresholds").empty()) {
    std::cout << "tau hits:   ";
    for (std::size_t i = 0; i < tau.at("thresholds").size(); ++i)
      std::cout << tau.at("thresholds")[i] << "->" << tau.at("hit_fraction")[i]
                << " ";
    std::cout << "\n";
  }
  if (!agg.at("regularity").is_null())
    std::cout << "regularity: " << agg.at("regularity").at("verdict")
              << "\n";
  std::cout << "artifacts:  " << manifest.at("artifacts").size()
            << " files listed in manifest.json\n";

  if (svg) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#8c564b", "#e377c2"};
    std::string body;
    double x1 = 1e-300, y1 = 1e-300;
    std::vector<std::pair<std::vector<double>, std::vector<double>>> curves;
    for (int i = 0; i < 6; ++i) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%s/path_%04d.csv", dir.c_str(), i);
      if (!std::filesystem::exists(buf)) break;
      const auto cols = parse_csv_columns(read_text_file(buf));
      if (cols.size() < 2) continue;
      curves.emplace_back(cols[0], cols[1]);
      for (double x : cols[0]) x1 = std::max(x1, x);
      for (double y : cols[1]) y1 = std::max(y1, y);
    }
    for (std::size_t i = 0; i < curves.size(); ++i)
      body += svg_polyline(curves[i].first, curves[i].second, 0.0, x1, 0.0,
                           y1, colors[i % 6]);
    const std::string svg_doc =
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" "
        "height=\"460\">\n<rect width=\"800\" height=\"460\" "
        "fill=\"white\"/>\n<line x1=\"60\" y1=\"420\" x2=\"760\" y2=\"420\" "
        "stroke=\"black\"/>\n<line x1=\"60\" y1=\"40\" x2=\"60\" y2=\"420\" "
        "stroke=\"black\"/>\n<text x=\"400\" y=\"450\" font-size=\"12\" "
        "text-anchor=\"middle\">t</text>\n<text x=\"20\" y=\"230\" "
        "font-size=\"12\">sup</text>\n" +
        body + "</svg>\n";
    write_text_file(dir + "/report.svg", svg_doc);
    std::cout << "wrote " << dir << "/report.svg\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for semilinear stochastic PDEs"};
  app.require_subcommand(1);
  app.fallthrough();  // allow the global flags below after the subcommand

  GlobalOpts g;
  app.add_option("--seed", g.seed, "master seed override")
      ->each([&](const std::string&) { g.seed_set = true; });
  app.add_option("--out-dir", g.out_dir, "output directory override");
  app.add_option("--format", g.format, "output format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--threads", g.threads, "worker thread override");
  app.add_flag("--force", g.force, "run even when the config is inadmissible");

  // admissible
  auto* adm = app.add_subcommand("admissible", "decide solvability conditions");
  int adm_d = 1;
  double adm_lambda = 0.0, adm_gamma = 0.25, adm_p = 10.0, adm_alpha = 0.5,
         adm_rate = 1.0;
  std::string adm_cov = "white";
  adm->add_option("--d", adm_d, "dimension (1-3)")->required();
  adm->add_option("--lambda", adm_lambda, "diffusion exponent offset")
      ->required();
  adm->add_option("--cov", adm_cov, "covariance: white|riesz|gaussian")
      ->required();
  adm->add_option("--gamma", adm_gamma, "requested smoothness")->required();
  adm->add_option("--p", adm_p, "requested integrability")->required();
  adm->add_option("--alpha", adm_alpha, "riesz exponent");
  adm->add_option("--rate", adm_rate, "gaussian decay rate");

  // verify-kernels
  auto* ver = app.add_subcommand("verify-kernels",
                                 "kernel and noise-law verification suite");
  int ver_d = 1;
  bool ver_noise = false;
  ver->add_option("--d", ver_d, "accepted for interface parity (suite is "
                                "dimension-complete)");
  ver->add_flag("--with-noise", ver_noise,
                "also run the sampled-noise law checks");

  // sample-noise
  auto* sn = app.add_subcommand("sample-noise",
                                "draw increments and estimate covariance");
  std::string sn_cov = "gaussian";
  int sn_d = 1, sn_n = 256, sn_count = 200;
  double sn_alpha = 0.5, sn_rate = 1.0, sn_L = 16.0, sn_dt = 0.01;
  sn->add_option("--cov", sn_cov, "covariance: white|riesz|gaussian");
  sn->add_option("--d", sn_d, "dimension");
  sn->add_option("--alpha", sn_alpha, "riesz exponent");
  sn->add_option("--rate", sn_rate, "gaussian decay rate");
  sn->add_option("--n", sn_n, "grid points per axis");
  sn->add_option("--L", sn_L, "box side");
  sn->add_option("--dt", sn_dt, "time step");
  sn->add_option("--count", sn_count, "number of increments");

  // simulate
  auto* sim = app.add_subcommand("simulate", "run an experiment config");
  std::string sim_config;
  sim->add_option("--config", sim_config, "config file (TOML subset)")
      ->required();

  // estimate-holder
  auto* est = app.add_subcommand(
      "estimate-holder", "regularity estimate from stored artifacts");
  std::string est_dir;
  double est_q = 2.0;
  est->add_option("--dir", est_dir, "artifact directory")->required();
  est->add_option("--q", est_q, "structure function order");

  // report
  auto* rep = app.add_subcommand("report", "summarize a run directory");
  std::string rep_dir;
  bool rep_svg = false;
  rep->add_option("--dir", rep_dir, "artifact directory")->required();
  rep->add_flag("--svg", rep_svg, "also render report.svg");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (adm->parsed()) {
      ProblemSpec spec;
      spec.d = adm_d;
      spec.lambda = adm_lambda;
      spec.gamma = adm_gamma;
      spec.p = adm_p;
      spec.cov = model_from_flags(adm_cov, adm_d, adm_alpha, adm_rate);
      return run_admissible(spec, g);
    }
    if (ver->parsed()) return run_verify_kernels(ver_noise);
    if (sn->parsed())
      return run_sample_noise(model_from_flags(sn_cov, sn_d, sn_alpha, sn_rate),
                              sn_n, sn_L, sn_dt, sn_count, g);
    if (sim->parsed()) return run_simulate(sim_config, g);
    if (est->parsed()) return run_estimate_holder(est_dir, est_q, g);
    if (rep->parsed()) return run_report(rep_dir, rep_svg);
  } catch (const invalid_spec& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  }
  return kUsage;
}
