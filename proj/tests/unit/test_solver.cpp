#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "spde/covariance.hpp"
#include "spde/errors.hpp"
#include "spde/grid.hpp"
#include "spde/noise.hpp"
#include "spde/solver.hpp"

using namespace spde;

namespace {

NoiseSampler white_sampler(const GridSpec& g) {
  return NoiseSampler::build(
      SpectralMeasure::for_model(CovarianceModel::white(g.d)), g);
}

std::vector<double> bump_field(const GridSpec& g, double amp, double width) {
  std::vector<double> u(g.cells());
  for (std::size_t f = 0; f < g.cells(); ++f) {
    const auto idx = g.unflatten(f);
    double r2 = 0.0;
    for (int a = 0; a < g.d; ++a) {
      const double x = g.coord_centered(idx[std::size_t(a)]);
      r2 += x * x;
    }
    u[f] = amp * std::exp(-r2 / (2.0 * width * width));
  }
  return u;
}

double signed_mass(const GridSpec& g, const std::vector<double>& u) {
  double s = 0.0;
  for (double v : u) s += v;
  return s * g.cell_volume();
}

}  // namespace

TEST_CASE("truncated power: clamp then power") {
  DiffusionSpec ds;
  ds.lambda = 0.5;
  ds.m = 2.0;
  CHECK(truncated_power(ds, 3.0) == doctest::Approx(std::pow(2.0, 1.5)));
  CHECK(truncated_power(ds, -3.0) == doctest::Approx(std::pow(2.0, 1.5)));
  CHECK(truncated_power(ds, 1.0) == 1.0);
  CHECK(truncated_power(ds, 0.0) == 0.0);
  CHECK(truncated_power(ds, -0.25) ==
        doctest::Approx(std::pow(0.25, 1.5)).epsilon(1e-15));

  DiffusionSpec lin;
  lin.lambda = 0.0;
  lin.m = 5.0;
  CHECK(truncated_power(lin, -3.5) == 3.5);
  CHECK(truncated_power(lin, 7.0) == 5.0);

  DiffusionSpec bad;
  bad.lambda = -0.1;
  CHECK_THROWS_AS(bad.validate(), invalid_spec);
  bad.lambda = 0.2;
  bad.m = 0.0;
  CHECK_THROWS_AS(bad.validate(), invalid_spec);
}

TEST_CASE("diffusion lipschitz bound closed form") {
  DiffusionSpec ds;
  ds.lambda = 0.5;
  ds.m = 2.0;
  CHECK(diffusion_lipschitz_bound(ds, 3.0) ==
        doctest::Approx(1.5 * 2.0 * 3.0).epsilon(1e-15));
  ds.lambda = 0.0;
  CHECK(diffusion_lipschitz_bound(ds, 2.0) == doctest::Approx(2.0));
}

TEST_CASE("single mode decays by the discrete resolvent factor") {
  const GridSpec g{1, 64, 8.0};
  const double diff = 0.7, dt = 0.01;
  const int k = 3;
  const auto co = Coefficients::heat(1, diff);
  DiffusionSpec ds;  // xi field irrelevant: noise is zero
  SimulationState s{g, 0.0, std::vector<double>(g.cells())};
  for (int j = 0; j < g.n; ++j) {
    s.u[std::size_t(j)] = std::sin(2.0 * M_PI * k * j / g.n);
  }
  const std::vector<double> original = s.u;
  const std::vector<double> zero(g.cells(), 0.0);
  step(s, co, ds, zero, dt);
  const double dx = g.spacing();
  const double theta = 2.0 * M_PI * k / g.n;
  const double symbol = diff * (2.0 - 2.0 * std::cos(theta)) / (dx * dx);
  const double factor = 1.0 / (1.0 + dt * symbol);
  for (std::size_t j = 0; j < g.cells(); ++j) {
    CHECK(s.u[j] == doctest::Approx(factor * original[j]).epsilon(1e-12));
  }
  CHECK(s.t == doctest::Approx(dt));
}

TEST_CASE("spectral and iterative solves agree for constant coefficients") {
  const GridSpec g{1, 64, 8.0};
  const auto sampler = white_sampler(g);
  const auto inc = sample_increment(sampler, 0.005, 17, 0);
  DiffusionSpec ds;
  ds.lambda = 0.25;
  ds.m = 10.0;

  auto fast = Coefficients::heat(1, 0.9);
  auto slow = fast;
  slow.constant = false;  // force the sparse iterative path

  SimulationState sa{g, 0.0, bump_field(g, 1.0, 0.5)};
  SimulationState sb = sa;
  step(sa, fast, ds, inc, 0.005);
  step(sb, slow, ds, inc, 0.005);
  for (std::size_t j = 0; j < g.cells(); ++j) {
    CHECK(sa.u[j] == doctest::Approx(sb.u[j]).epsilon(1e-8));
  }
}

TEST_CASE("zero is absorbing under the truncated diffusion") {
  const GridSpec g{1, 64, 8.0};
  const auto sampler = white_sampler(g);
  const auto co = Coefficients::heat(1);
  DiffusionSpec ds;
  ds.lambda = 0.3;
  ds.m = 100.0;
  SimulationState s{g, 0.0, std::vector<double>(g.cells(), 0.0)};
  Stepper st(g, co, ds);
  for (int k = 0; k < 5; ++k) {
    const auto inc = sample_increment(sampler, 0.01, 3, std::uint64_t(k));
    st.step(s, inc.values, 0.01);
  }
  for (double v : s.u) CHECK(v == 0.0);
}

TEST_CASE("spectral path conserves signed mass without zero-order terms") {
  const GridSpec g{1, 128, 8.0};
  const auto co = Coefficients::heat(1, 1.3);
  DiffusionSpec ds;
  SimulationState s{g, 0.0, bump_field(g, 2.0, 0.4)};
  const double m0 = signed_mass(g, s.u);
  const std::vector<double> zero(g.cells(), 0.0);
  Stepper st(g, co, ds);
  for (int k = 0; k < 20; ++k) st.step(s, zero, 1e-3);
  CHECK(signed_mass(g, s.u) == doctest::Approx(m0).epsilon(1e-12));
}

TEST_CASE("divergence form conserves signed mass on the iterative path") {
  const GridSpec g{1, 64, 2.0 * M_PI};
  auto co = Coefficients::preset("variable_a", 1);
  co.divergence_form = true;
  DiffusionSpec ds;
  SimulationState s{g, 0.0, bump_field(g, 1.5, 0.5)};
  const double m0 = signed_mass(g, s.u);
  const std::vector<double> zero(g.cells(), 0.0);
  Stepper st(g, co, ds);
  for (int k = 0; k < 10; ++k) st.step(s, zero, 1e-3);
  CHECK(signed_mass(g, s.u) == doctest::Approx(m0).epsilon(1e-7));
}

TEST_CASE("noise increment overload validates dt and grid") {
  const GridSpec g{1, 64, 8.0};
  const auto sampler = white_sampler(g);
  const auto inc = sample_increment(sampler, 0.01, 1, 0);
  const auto co = Coefficients::heat(1);
  DiffusionSpec ds;
  SimulationState s{g, 0.0, std::vector<double>(g.cells(), 1.0)};
  CHECK_THROWS_AS(step(s, co, ds, inc, 0.02), invalid_spec);
  const GridSpec g2{1, 32, 8.0};
  SimulationState s2{g2, 0.0, std::vector<double>(g2.cells(), 1.0)};
  CHECK_THROWS_AS(step(s2, co, ds, inc, 0.01), invalid_spec);
}

TEST_CASE("hitting times are nondecreasing in the threshold") {
  const GridSpec g{1, 64, 8.0};
  const auto sampler = white_sampler(g);
  auto co = Coefficients::heat(1);
  co.xi = [](double, const double*) { return 8.0; };
  co.K = 8.0;
  DiffusionSpec ds;
  ds.lambda = 0.0;
  ds.m = 1e6;
  MonitorSpec mon;
  mon.thresholds = {1.5, 2.5, 3.5, 5.0};
  const std::vector<double> u0(g.cells(), 1.0);
  int hits = 0;
  for (std::uint64_t stream = 0; stream < 10; ++stream) {
    const auto rec =
        run_path(co, ds, sampler, u0, 0.2, 1e-3, 2025, stream, mon);
    REQUIRE(rec.tau_hit.size() == mon.thresholds.size());
    double prev = 0.0;
    bool seen_nan = false;
    for (std::size_t i = 0; i < rec.tau_hit.size(); ++i) {
      const double tau = rec.tau_hit[i];
      if (std::isnan(tau)) {
        seen_nan = true;  // once a level is missed, all higher ones are too
      } else {
        CHECK(!seen_nan);
        CHECK(tau >= prev);
        prev = tau;
        ++hits;
      }
    }
  }
  CHECK(hits > 0);
}

TEST_CASE("series cadence: record_every plus initial and final states") {
  const GridSpec g{1, 64, 8.0};
  const auto sampler = white_sampler(g);
  const auto co = Coefficients::heat(1);
  DiffusionSpec ds;
  MonitorSpec mon;
  mon.record_every = 3;
  mon.snapshot_times = {0.05};
  mon.probe_cells = {5, 20};
  const std::vector<double> u0(g.cells(), 1.0);
  const auto rec = run_path(co, ds, sampler, u0, 0.1, 0.01, 7, 0, mon);
  // steps 0,3,6,9 plus the final step 10
  REQUIRE(rec.times.size() == 5);
  CHECK(rec.times.front() == 0.0);
  CHECK(rec.times.back() == doctest::Approx(0.1));
  CHECK(rec.times[1] == doctest::Approx(0.03));
  CHECK(rec.sup_norm.size() == rec.times.size());
  CHECK(rec.l1_mass.size() == rec.times.size());
  CHECK(rec.mass.size() == rec.times.size());
  CHECK(rec.min_value.size() == rec.times.size());
  REQUIRE(rec.probes.size() == 2);
  CHECK(rec.probes[0].size() == rec.times.size());
  REQUIRE(rec.snapshots.size() == 1);
  CHECK(std::abs(rec.snapshots[0].t - 0.05) <= 0.01 + 1e-12);
  CHECK(rec.snapshots[0].u.size() == g.cells());
  CHECK(!rec.blew_up);
}

TEST_CASE("paths below the truncation level ignore it bitwise") {
  const GridSpec g{1, 64, 8.0};
  const auto sampler = white_sampler(g);
  const auto co = Coefficients::heat(1);
  DiffusionSpec da, db;
  da.lambda = 0.3;
  da.m = 1e6;
  db.lambda = 0.3;
  db.m = 1e7;
  MonitorSpec mon;
  const std::vector<double> u0(g.cells(), 1.0);
  const auto ra = run_path(co, da, sampler, u0, 0.05, 1e-3, 11, 2, mon);
  const auto rb = run_path(co, db, sampler, u0, 0.05, 1e-3, 11, 2, mon);
  REQUIRE(!ra.blew_up);
  REQUIRE(!rb.blew_up);
  REQUIRE(ra.sup_norm.size() == rb.sup_norm.size());
  for (std::size_t i = 0; i < ra.sup_norm.size(); ++i) {
    CHECK(ra.sup_norm[i] == rb.sup_norm[i]);
  }
}

TEST_CASE("auxiliary function derivatives match finite differences") {
  const double k = 2.0;
  const double x[2] = {0.7, -1.3};
  double grad[2], hess[4];
  aux_psi_grad(k, x, 2, grad);
  aux_psi_hess(k, x, 2, hess);
  const double h = 1e-5;
  for (int i = 0; i < 2; ++i) {
    double xp[2] = {x[0], x[1]}, xm[2] = {x[0], x[1]};
    xp[i] += h;
    xm[i] -= h;
    const double fd = (aux_psi(k, xp, 2) - aux_psi(k, xm, 2)) / (2.0 * h);
    CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-7));
    double gp[2], gm[2];
    aux_psi_grad(k, xp, 2, gp);
    aux_psi_grad(k, xm, 2, gm);
    for (int j = 0; j < 2; ++j) {
      const double fd2 = (gp[j] - gm[j]) / (2.0 * h);
      CHECK(hess[i * 2 + j] == doctest::Approx(fd2).epsilon(1e-6));
    }
  }
  CHECK(hess[1] == doctest::Approx(hess[2]).epsilon(1e-12));

  // near the origin the hessian tends to -I/k^2
  const double x0[2] = {1e-9, 0.0};
  aux_psi_hess(k, x0, 2, hess);
  CHECK(hess[0] == doctest::Approx(-1.0 / (k * k)).epsilon(1e-6));
  CHECK(hess[3] == doctest::Approx(-1.0 / (k * k)).epsilon(1e-6));
  CHECK(std::abs(hess[1]) < 1e-9);
}

TEST_CASE("comparison-function residuals: compliant presets stay negative") {
  const GridSpec g{1, 64, 20.0};
  const std::vector<double> ks{1.0, 2.0};
  for (const char* name : {"heat", "heat_div", "variable_a", "drift"}) {
    const auto co = Coefficients::preset(name, 1);
    const auto res = lyapunov_check(co, g, ks);
    REQUIRE(res.size() == ks.size());
    for (const auto& r : res) {
      INFO(name, " k=", r.k);
      CHECK(r.max_residual < 0.0);
    }
  }
  const auto bad = Coefficients::preset("violating_c", 1);
  const auto res = lyapunov_check(bad, g, {1.0});
  CHECK(res[0].max_residual > 0.0);
}

TEST_CASE("assumption checks measure ellipticity and detect violations") {
  const GridSpec g{1, 64, 2.0 * M_PI};
  auto rep = check_assumptions(Coefficients::heat(1), g, 0.1);
  CHECK(rep.ok);
  CHECK(rep.kappa_measured == doctest::Approx(1.0));
  CHECK(rep.upper_measured == doctest::Approx(1.0));

  rep = check_assumptions(Coefficients::preset("variable_a", 1), g, 0.1);
  CHECK(rep.ok);
  CHECK(rep.kappa_measured == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(rep.upper_measured == doctest::Approx(1.2).epsilon(1e-9));

  rep = check_assumptions(Coefficients::preset("violating_c", 1), g, 0.1);
  CHECK(!rep.ok);
}

TEST_CASE("spectral bessel norm: identity at gamma 0, exact mode scaling") {
  const GridSpec g{1, 64, 8.0};
  std::vector<double> u(g.cells());
  for (int j = 0; j < g.n; ++j) {
    u[std::size_t(j)] = std::sin(2.0 * M_PI * 3 * j / g.n);
  }
  double lp = 0.0;
  for (double v : u) lp += v * v;
  lp = std::sqrt(g.cell_volume() * lp);
  CHECK(discrete_bessel_norm(g, u, 0.0, 2.0) ==
        doctest::Approx(lp).epsilon(1e-12));

  const double xi3 = g.frequency(3);
  const double want = std::pow(1.0 + xi3 * xi3, 0.35) * lp;
  CHECK(discrete_bessel_norm(g, u, 0.7, 2.0) ==
        doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("signed mass is a martingale for b = c = 0") {
  const GridSpec g{1, 64, 8.0};
  const auto sampler = white_sampler(g);
  const auto co = Coefficients::heat(1);
  DiffusionSpec ds;
  ds.lambda = 0.25;
  ds.m = 1e6;
  MonitorSpec mon;
  mon.record_every = 8;
  const std::vector<double> u0(g.cells(), 1.0);
  std::vector<TrajectoryRecord> recs;
  for (std::uint64_t stream = 0; stream < 30; ++stream) {
    recs.push_back(run_path(co, ds, sampler, u0, 0.02, 1e-3, 909, stream, mon));
  }
  const auto stat = mass_martingale_stat(recs);
  CHECK(stat.n == 30);
  CHECK(stat.se > 0.0);
  CHECK(std::abs(stat.z) < 4.0);
}
