#include "spde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include "spde/errors.hpp"
#include "spde/fft.hpp"

namespace spde {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kFdStep = 1e-4;  // coefficient finite-difference step

void fill_identity(int d, double scale, double* out) {
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out[i * d + j] = (i == j) ? scale : 0.0;
}

}  // namespace

Coefficients Coefficients::heat(int d, double diffusivity, double K) {
  if (d < 1 || d > 3) throw invalid_spec("heat coefficients: d must be 1..3");
  if (!(diffusivity > 0.0))
    throw invalid_spec("heat coefficients: diffusivity must be positive");
  Coefficients co;
  co.d = d;
  co.a = [d, diffusivity](double, const double*, double* out) {
    fill_identity(d, diffusivity, out);
  };
  co.b = [d](double, const double*, double* out) {
    std::fill(out, out + d, 0.0);
  };
  co.c = [](double, const double*) { return 0.0; };
  co.xi = [](double, const double*) { return 1.0; };
  co.kappa0 = diffusivity;
  co.K = std::max(K, diffusivity);
  co.constant = true;
  co.divergence_form = false;
  return co;
}

Coefficients Coefficients::preset(const std::string& name, int d) {
  if (d < 1 || d > 3) throw invalid_spec("coefficient preset: d must be 1..3");
  if (name == "heat") return heat(d);
  if (name == "heat_div") {
    Coefficients co = heat(d);
    co.divergence_form = true;
    return co;
  }
  if (name == "variable_a") {
    // a(x) = (1 + 0.2 sin(x_1)) I: uniformly elliptic, smooth, bounded.
    Coefficients co = heat(d);
    co.a = [d](double, const double* x, double* out) {
      fill_identity(d, 1.0 + 0.2 * std::sin(x[0]), out);
    };
    co.kappa0 = 0.8;
    co.K = 2.0;
    co.constant = false;
    return co;
  }
  if (name == "drift") {
    Coefficients co = heat(d);
    co.b = [d](double, const double*, double* out) {
      std::fill(out, out + d, 0.0);
      out[0] = 0.5;
    };
    return co;
  }
  if (name == "reaction") {
    Coefficients co = heat(d);
    co.c = [](double, const double*) { return 1.0; };
    return co;
  }
  if (name == "violating_c") {
    // c = 10 K deliberately breaks the zero-order bound; the comparison
    // function residual turns positive near the origin.
    Coefficients co = heat(d);
    co.c = [](double, const double*) { return 10.0; };
    return co;
  }
  throw invalid_spec("unknown coefficient preset: " + name);
}

// ---------------------------------------------------------------------------
// assumption checking

namespace {

// Central-difference C^2 norm data for one scalar component.
struct C2Accum {
  double sup0 = 0.0, sup1 = 0.0, sup2 = 0.0;
  double total() const { return sup0 + sup1 + sup2; }
};

template <typename F>
void accumulate_c2(F&& f, double t, const double* x, int d, C2Accum& acc) {
  const double h = kFdStep;
  double xp[3], xm[3], xpp[3];
  const double f0 = f(t, x);
  acc.sup0 = std::max(acc.sup0, std::abs(f0));
  for (int k = 0; k < d; ++k) {
    std::copy(x, x + d, xp);
    std::copy(x, x + d, xm);
    xp[k] += h;
    xm[k] -= h;
    const double fp = f(t, xp);
    const double fm = f(t, xm);
    acc.sup1 = std::max(acc.sup1, std::abs((fp - fm) / (2.0 * h)));
    acc.sup2 = std::max(acc.sup2, std::abs((fp - 2.0 * f0 + fm) / (h * h)));
    for (int l = k + 1; l < d; ++l) {
      double cross = 0.0;
      for (int sk = -1; sk <= 1; sk += 2)
        for (int sl = -1; sl <= 1; sl += 2) {
          std::copy(x, x + d, xpp);
          xpp[k] += sk * h;
          xpp[l] += sl * h;
          cross += sk * sl * f(t, xpp);
        }
      acc.sup2 = std::max(acc.sup2, std::abs(cross / (4.0 * h * h)));
    }
  }
}

}  // namespace

AssumptionReport check_assumptions(const Coefficients& co, const GridSpec& g,
                                   double T, int time_samples) {
  g.validate();
  if (co.d != g.d) throw invalid_spec("coefficient/grid dimension mismatch");
  if (time_samples < 1) throw invalid_spec("time_samples must be >= 1");
  if (!(T >= 0.0)) throw invalid_spec("T must be nonnegative");
  if (!co.a || !co.b || !co.c || !co.xi)
    throw invalid_spec("coefficient functions must all be set");

  const int d = co.d;
  const std::size_t cells = g.cells();
  const std::size_t max_pts = 4096;
  const std::size_t stride = cells > max_pts ? (cells + max_pts - 1) / max_pts : 1;

  AssumptionReport rep;
  rep.kappa_measured = std::numeric_limits<double>::infinity();
  rep.upper_measured = -std::numeric_limits<double>::infinity();

  std::vector<C2Accum> a_acc(std::size_t(d) * d);
  std::vector<C2Accum> b_acc(d);
  C2Accum c_acc;

  Eigen::MatrixXd A(d, d);
  std::vector<double> avals(std::size_t(d) * d);
  double x[3] = {0.0, 0.0, 0.0};

  for (int ti = 0; ti < time_samples; ++ti) {
    const double t =
        time_samples == 1 ? 0.0 : T * double(ti) / double(time_samples - 1);
    for (std::size_t f = 0; f < cells; f += stride) {
      const auto idx = g.unflatten(f);
      for (int i = 0; i < d; ++i) x[i] = g.coord_centered(idx[i]);

      co.a(t, x, avals.data());
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          A(i, j) = 0.5 * (avals[std::size_t(i) * d + j] +
                           avals[std::size_t(j) * d + i]);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
      rep.kappa_measured =
          std::min(rep.kappa_measured, es.eigenvalues().minCoeff());
      rep.upper_measured =
          std::max(rep.upper_measured, es.eigenvalues().maxCoeff());

      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          const std::size_t comp = std::size_t(i) * d + j;
          accumulate_c2(
              [&co, comp, d](double tt, const double* xx) {
                double tmp[9];
                co.a(tt, xx, tmp);
                (void)d;
                return tmp[comp];
              },
              t, x, d, a_acc[comp]);
        }
      for (int i = 0; i < d; ++i)
        accumulate_c2(
            [&co, i, d](double tt, const double* xx) {
              double tmp[3];
              co.b(tt, xx, tmp);
              (void)d;
              return tmp[i];
            },
            t, x, d, b_acc[i]);
      accumulate_c2([&co](double tt, const double* xx) { return co.c(tt, xx); },
                    t, x, d, c_acc);
      rep.xi_sup = std::max(rep.xi_sup, std::abs(co.xi(t, x)));
    }
  }

  for (const auto& acc : a_acc) rep.a_c2 = std::max(rep.a_c2, acc.total());
  for (const auto& acc : b_acc) rep.b_c2 = std::max(rep.b_c2, acc.total());
  rep.c_c2 = c_acc.total();

  const double tol = 1e-9 * (1.0 + std::abs(co.K));
  std::ostringstream msg;
  bool ok = true;
  if (rep.kappa_measured < co.kappa0 - tol) {
    ok = false;
    msg << "ellipticity floor violated (min eigenvalue "
        << rep.kappa_measured << " < kappa0 " << co.kappa0 << "); ";
  }
  if (rep.upper_measured > co.K + tol) {
    ok = false;
    msg << "a eigenvalue bound violated (" << rep.upper_measured << " > K); ";
  }
  if (rep.a_c2 > co.K + tol) {
    ok = false;
    msg << "a C^2 norm exceeds K (" << rep.a_c2 << "); ";
  }
  if (rep.b_c2 > co.K + tol) {
    ok = false;
    msg << "b C^2 norm exceeds K (" << rep.b_c2 << "); ";
  }
  if (rep.c_c2 > co.K + tol) {
    ok = false;
    msg << "c C^2 norm exceeds K (" << rep.c_c2 << "); ";
  }
  if (rep.xi_sup > co.K + tol) {
    ok = false;
    msg << "sup |xi| exceeds K (" << rep.xi_sup << "); ";
  }
  rep.ok = ok;
  rep.message = ok ? "all assumptions hold on the sampled set" : msg.str();
  return rep;
}

// ---------------------------------------------------------------------------
// truncated diffusion

void DiffusionSpec::validate() const {
  if (!(lambda >= 0.0)) throw invalid_spec("lambda must be >= 0");
  if (!(m > 0.0)) throw invalid_spec("truncation level m must be positive");
}

double truncated_power(const DiffusionSpec& ds, double u) {
  const double v = std::clamp(u, -ds.m, ds.m);
  const double av = std::abs(v);
  if (ds.lambda == 0.0) return av;
  return std::pow(av, 1.0 + ds.lambda);
}

double diffusion_lipschitz_bound(const DiffusionSpec& ds, double xi_sup) {
  if (ds.lambda == 0.0) return xi_sup;
  return (1.0 + ds.lambda) * std::pow(2.0 * ds.m, ds.lambda) * xi_sup;
}

// ---------------------------------------------------------------------------
// stepper

struct Stepper::Impl {
  Coefficients co;
  DiffusionSpec ds;
  std::vector<double> coord;  // centered coordinate of cell index along an axis

  // spectral path (constant coefficients)
  std::unique_ptr<FftNd> fft;
  std::vector<cplx> symbol;  // DFT symbol of L
  std::vector<cplx> denom;   // 1 - dt * symbol, cached per dt
  std::vector<cplx> buf;
  double cached_dt = -1.0;
  double xi_const = 1.0;

  // iterative path (variable coefficients)
  std::vector<double> avals, bvals, cvals, xivals;  // per-cell samples
  Eigen::VectorXd rhs, sol;

  void build_symbol(const GridSpec& g);
  void assemble_and_solve(const GridSpec& g, double t, double dt,
                          const std::vector<double>& rhs_field,
                          std::vector<double>& u);
};

void Stepper::Impl::build_symbol(const GridSpec& g) {
  const int d = g.d;
  const std::size_t n = g.n;
  const double dx = g.spacing();
  const double origin[3] = {0.0, 0.0, 0.0};
  std::vector<double> a(std::size_t(d) * d), b(d);
  co.a(0.0, origin, a.data());
  co.b(0.0, origin, b.data());
  const double c0 = co.c(0.0, origin);
  xi_const = co.xi(0.0, origin);

  std::vector<double> ct(n), st(n);
  for (std::size_t q = 0; q < n; ++q) {
    const double th = 2.0 * M_PI * double(q) / double(n);
    ct[q] = std::cos(th);
    st[q] = std::sin(th);
  }

  symbol.assign(g.cells(), cplx(0.0));
  for (std::size_t f = 0; f < g.cells(); ++f) {
    const auto idx = g.unflatten(f);
    double re = c0;
    double im = 0.0;
    for (int i = 0; i < d; ++i) {
      re += a[std::size_t(i) * d + i] * (2.0 * ct[idx[i]] - 2.0) / (dx * dx);
      im += b[i] * st[idx[i]] / dx;
      for (int j = i + 1; j < d; ++j)
        re += 2.0 * a[std::size_t(i) * d + j] * (-st[idx[i]] * st[idx[j]]) /
              (dx * dx);
    }
    symbol[f] = cplx(re, im);
  }
}

Stepper::Stepper(const GridSpec& g, const Coefficients& co,
                 const DiffusionSpec& ds)
    : grid_(g), impl_(new Impl) {
  g.validate();
  ds.validate();
  if (co.d != g.d) throw invalid_spec("coefficient/grid dimension mismatch");
  if (!co.a || !co.b || !co.c || !co.xi)
    throw invalid_spec("coefficient functions must all be set");
  impl_->co = co;
  impl_->ds = ds;
  impl_->coord.resize(g.n);
  for (std::size_t j = 0; j < std::size_t(g.n); ++j)
    impl_->coord[j] = g.coord_centered(int(j));
  if (co.constant) {
    impl_->fft = std::make_unique<FftNd>(g.d, std::size_t(g.n));
    impl_->build_symbol(g);
    impl_->buf.resize(g.cells());
  } else {
    impl_->avals.resize(g.cells() * std::size_t(g.d) * g.d);
    impl_->bvals.resize(g.cells() * std::size_t(g.d));
    impl_->cvals.resize(g.cells());
    impl_->xivals.resize(g.cells());
  }
}

Stepper::~Stepper() = default;
Stepper::Stepper(Stepper&&) noexcept = default;

void Stepper::Impl::assemble_and_solve(const GridSpec& g, double t, double dt,
                                       const std::vector<double>& rhs_field,
                                       std::vector<double>& u) {
  const int d = g.d;
  const std::size_t cells = g.cells();
  const double dx = g.spacing();
  const double inv_dx2 = 1.0 / (dx * dx);
  const std::size_t n = g.n;

  // freeze coefficient samples at time t
  double x[3] = {0.0, 0.0, 0.0};
  for (std::size_t f = 0; f < cells; ++f) {
    const auto idx = g.unflatten(f);
    for (int i = 0; i < d; ++i) x[i] = coord[idx[i]];
    co.a(t, x, &avals[f * std::size_t(d) * d]);
    co.b(t, x, &bvals[f * std::size_t(d)]);
    cvals[f] = co.c(t, x);
    xivals[f] = co.xi(t, x);
  }

  auto shift_flat = [&](const std::array<int, 3>& base, int axis, int delta) {
    std::array<int, 3> tmp = base;
    int v = (tmp[axis] + delta) % int(n);
    if (v < 0) v += int(n);
    tmp[axis] = v;
    return g.flatten(tmp);
  };

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(cells * std::size_t(2 * d * d + 2 * d + 1));

  for (std::size_t f = 0; f < cells; ++f) {
    const auto idx = g.unflatten(f);
    const double* af = &avals[f * std::size_t(d) * d];
    const double* bf = &bvals[f * std::size_t(d)];
    double diag = 1.0 - dt * cvals[f];

    for (int i = 0; i < d; ++i) {
      const std::size_t fp = shift_flat(idx, i, +1);
      const std::size_t fm = shift_flat(idx, i, -1);
      if (co.divergence_form) {
        // d_i(a_ii d_i u) with face values averaged from cell samples
        const double ap =
            0.5 * (af[std::size_t(i) * d + i] +
                   avals[fp * std::size_t(d) * d + std::size_t(i) * d + i]);
        const double am =
            0.5 * (af[std::size_t(i) * d + i] +
                   avals[fm * std::size_t(d) * d + std::size_t(i) * d + i]);
        trips.emplace_back(int(f), int(fp), -dt * ap * inv_dx2);
        trips.emplace_back(int(f), int(fm), -dt * am * inv_dx2);
        diag += dt * (ap + am) * inv_dx2;
      } else {
        const double aii = af[std::size_t(i) * d + i];
        trips.emplace_back(int(f), int(fp), -dt * aii * inv_dx2);
        trips.emplace_back(int(f), int(fm), -dt * aii * inv_dx2);
        diag += dt * 2.0 * aii * inv_dx2;
      }
      // first-order term, centered
      const double bi = bf[i];
      if (bi != 0.0) {
        trips.emplace_back(int(f), int(fp), -dt * bi / (2.0 * dx));
        trips.emplace_back(int(f), int(fm), dt * bi / (2.0 * dx));
      }
    }

    if (!co.divergence_form) {
      // cross terms a_ij D0_i D0_j u summed over ordered pairs i != j
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          if (i == j) continue;
          const double aij = af[std::size_t(i) * d + j];
          if (aij == 0.0) continue;
          const double w = -dt * aij * inv_dx2 / 4.0;
          for (int si = -1; si <= 1; si += 2)
            for (int sj = -1; sj <= 1; sj += 2) {
              std::array<int, 3> tmp = idx;
              tmp[i] = (tmp[i] + si + int(n)) % int(n);
              tmp[j] = (tmp[j] + sj + int(n)) % int(n);
              trips.emplace_back(int(f), int(g.flatten(tmp)),
                                 w * double(si * sj));
            }
        }
    } else {
      // cross terms D0_i(a_ij D0_j u) over ordered pairs i != j; the
      // telescoping column sums keep the discretization mass conserving.
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          if (i == j) continue;
          const std::size_t fpi = shift_flat(idx, i, +1);
          const std::size_t fmi = shift_flat(idx, i, -1);
          const double api =
              avals[fpi * std::size_t(d) * d + std::size_t(i) * d + j];
          const double ami =
              avals[fmi * std::size_t(d) * d + std::size_t(i) * d + j];
          const double w = -dt * inv_dx2 / 4.0;
          const auto base_p = g.unflatten(fpi);
          trips.emplace_back(int(f), int(shift_flat(base_p, j, +1)), w * api);
          trips.emplace_back(int(f), int(shift_flat(base_p, j, -1)), -w * api);
          const auto base_m = g.unflatten(fmi);
          trips.emplace_back(int(f), int(shift_flat(base_m, j, +1)), -w * ami);
          trips.emplace_back(int(f), int(shift_flat(base_m, j, -1)), w * ami);
        }
    }

    trips.emplace_back(int(f), int(f), diag);
  }

  const int ni = int(cells);
  Eigen::SparseMatrix<double> A(ni, ni);
  A.setFromTriplets(trips.begin(), trips.end());

  rhs.resize(Eigen::Index(cells));
  for (std::size_t f = 0; f < cells; ++f) rhs[Eigen::Index(f)] = rhs_field[f];
  Eigen::VectorXd guess = rhs;
  for (std::size_t f = 0; f < cells; ++f) guess[Eigen::Index(f)] = u[f];

  Eigen::BiCGSTAB<Eigen::SparseMatrix<double>> solver;
  solver.setTolerance(1e-10);
  solver.setMaxIterations(20000);
  solver.compute(A);
  sol = solver.solveWithGuess(rhs, guess);
  if (solver.info() != Eigen::Success)
    throw numeric_error("implicit solve failed to reach relative residual "
                        "1e-10 (error " +
                        std::to_string(solver.error()) + ")");
  for (std::size_t f = 0; f < cells; ++f) u[f] = sol[Eigen::Index(f)];
}

void Stepper::step(SimulationState& s, const std::vector<double>& noise,
                   double dt) {
  if (!(dt > 0.0)) throw invalid_spec("dt must be positive");
  if (s.grid.d != grid_.d || s.grid.n != grid_.n || s.grid.L != grid_.L)
    throw invalid_spec("state grid does not match stepper grid");
  const std::size_t cells = grid_.cells();
  if (s.u.size() != cells) throw invalid_spec("state field size mismatch");
  if (noise.size() != cells) throw invalid_spec("noise field size mismatch");

  Impl& im = *impl_;
  if (im.co.constant) {
    if (dt != im.cached_dt) {
      im.denom.resize(cells);
      double min_mod = std::numeric_limits<double>::infinity();
      for (std::size_t f = 0; f < cells; ++f) {
        im.denom[f] = cplx(1.0, 0.0) - dt * im.symbol[f];
        min_mod = std::min(min_mod, std::abs(im.denom[f]));
      }
      if (min_mod < 0.05)
        throw numeric_error(
            "implicit factor nearly singular: reduce dt (reaction term too "
            "strong for this step)");
      im.cached_dt = dt;
    }
    for (std::size_t f = 0; f < cells; ++f) {
      const double sig = im.xi_const * truncated_power(im.ds, s.u[f]);
      im.buf[f] = cplx(s.u[f] + sig * noise[f], 0.0);
    }
    im.fft->forward(im.buf.data());
    for (std::size_t f = 0; f < cells; ++f) im.buf[f] /= im.denom[f];
    im.fft->inverse(im.buf.data());
    for (std::size_t f = 0; f < cells; ++f) s.u[f] = im.buf[f].real();
  } else {
    // sigma uses the pre-step field and time
    double x[3] = {0.0, 0.0, 0.0};
    std::vector<double> rhs_field(cells);
    for (std::size_t f = 0; f < cells; ++f) {
      const auto idx = grid_.unflatten(f);
      for (int i = 0; i < grid_.d; ++i) x[i] = im.coord[idx[i]];
      const double sig = im.co.xi(s.t, x) * truncated_power(im.ds, s.u[f]);
      rhs_field[f] = s.u[f] + sig * noise[f];
    }
    im.assemble_and_solve(grid_, s.t, dt, rhs_field, s.u);
  }
  s.t += dt;
}

void step(SimulationState& s, const Coefficients& co, const DiffusionSpec& ds,
          const std::vector<double>& noise, double dt) {
  Stepper st(s.grid, co, ds);
  st.step(s, noise, dt);
}

void step(SimulationState& s, const Coefficients& co, const DiffusionSpec& ds,
          const NoiseIncrement& noise, double dt) {
  if (noise.dt != dt)
    throw invalid_spec("noise increment dt does not match the step dt");
  if (noise.grid.d != s.grid.d || noise.grid.n != s.grid.n ||
      noise.grid.L != s.grid.L)
    throw invalid_spec("noise increment grid does not match the state grid");
  step(s, co, ds, noise.values, dt);
}

// ---------------------------------------------------------------------------
// path driver

TrajectoryRecord run_path(const Coefficients& co, const DiffusionSpec& ds,
                          const NoiseSampler& sampler,
                          const std::vector<double>& u0, double T, double dt,
                          std::uint64_t seed, std::uint64_t stream,
                          const MonitorSpec& mon) {
  const GridSpec g = sampler.grid();
  if (co.d != g.d) throw invalid_spec("coefficient/grid dimension mismatch");
  if (u0.size() != g.cells()) throw invalid_spec("u0 size mismatch");
  if (!(T > 0.0) || !(dt > 0.0)) throw invalid_spec("T and dt must be positive");
  const long long nsteps = std::llround(T / dt);
  if (nsteps < 1 || std::abs(double(nsteps) * dt - T) > 1e-9 * std::max(T, 1.0))
    throw invalid_spec("T must be an integer multiple of dt");
  if (mon.record_every < 1) throw invalid_spec("record_every must be >= 1");
  for (std::size_t pc : mon.probe_cells)
    if (pc >= g.cells()) throw invalid_spec("probe cell out of range");

  TrajectoryRecord rec;
  rec.grid = g;
  rec.dt = dt;
  rec.seed = seed;
  rec.stream = stream;
  rec.thresholds = mon.thresholds;
  rec.tau_hit.assign(mon.thresholds.size(), kNan);
  rec.probe_cells = mon.probe_cells;
  rec.probes.resize(mon.probe_cells.size());

  std::multimap<long long, double> snap_at;
  for (double ts : mon.snapshot_times) {
    if (!(ts >= 0.0) || ts > T * (1.0 + 1e-12))
      throw invalid_spec("snapshot time outside [0, T]");
    snap_at.emplace(std::llround(ts / dt), ts);
  }

  Stepper stepper(g, co, ds);
  SimulationState state;
  state.grid = g;
  state.t = 0.0;
  state.u = u0;

  RngStream rng(seed, stream);
  SamplerWorkspace ws(g);
  std::vector<double> noise(g.cells());
  const double cellvol = g.cell_volume();

  auto sup_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
  };
  auto check_tau = [&](double t, double sup) {
    for (std::size_t i = 0; i < rec.thresholds.size(); ++i)
      if (std::isnan(rec.tau_hit[i]) && sup >= rec.thresholds[i])
        rec.tau_hit[i] = t;
  };
  auto record_row = [&](double t) {
    rec.times.push_back(t);
    double sup = 0.0, l1 = 0.0, mass = 0.0;
    double mn = std::numeric_limits<double>::infinity();
    for (double v : state.u) {
      sup = std::max(sup, std::abs(v));
      l1 += std::abs(v);
      mass += v;
      mn = std::min(mn, v);
    }
    rec.sup_norm.push_back(sup);
    rec.l1_mass.push_back(l1 * cellvol);
    rec.mass.push_back(mass * cellvol);
    rec.min_value.push_back(mn);
    if (mon.bessel_gamma)
      rec.bessel_norm.push_back(
          discrete_bessel_norm(g, state.u, *mon.bessel_gamma, 2.0));
    for (std::size_t p = 0; p < rec.probe_cells.size(); ++p)
      rec.probes[p].push_back(state.u[rec.probe_cells[p]]);
  };
  auto take_snapshots = [&](long long k) {
    auto range = snap_at.equal_range(k);
    for (auto it = range.first; it != range.second; ++it)
      rec.snapshots.push_back(Snapshot{state.t, state.u});
  };

  check_tau(0.0, sup_of(state.u));
  record_row(0.0);
  take_snapshots(0);

  for (long long k = 1; k <= nsteps; ++k) {
    sampler.sample_into(dt, rng, ws, noise);
    stepper.step(state, noise, dt);

    bool finite = true;
    for (double v : state.u)
      if (!std::isfinite(v)) {
        finite = false;
        break;
      }
    if (!finite) {
      rec.blew_up = true;
      rec.blowup_time = state.t;
      // escape to infinity: every remaining threshold counts as hit now
      for (std::size_t i = 0; i < rec.thresholds.size(); ++i)
        if (std::isnan(rec.tau_hit[i])) rec.tau_hit[i] = state.t;
      break;
    }

    check_tau(state.t, sup_of(state.u));
    if (k % mon.record_every == 0 || k == nsteps) record_row(state.t);
    take_snapshots(k);
  }

  return rec;
}

// ---------------------------------------------------------------------------
// comparison function

double aux_psi(double k, const double* x, int d) {
  double r2 = 0.0;
  for (int i = 0; i < d; ++i) r2 += x[i] * x[i];
  const double s = std::sqrt(r2) / k;
  if (s > 700.0) return 0.0;
  return 1.0 / std::cosh(s);
}

void aux_psi_grad(double k, const double* x, int d, double* grad) {
  double r2 = 0.0;
  for (int i = 0; i < d; ++i) r2 += x[i] * x[i];
  const double r = std::sqrt(r2);
  if (r < 1e-14 || r / k > 700.0) {
    std::fill(grad, grad + d, 0.0);
    return;
  }
  const double s = r / k;
  const double C = 1.0 / std::cosh(s);
  const double Tn = std::tanh(s);
  for (int i = 0; i < d; ++i) grad[i] = -C * Tn * x[i] / (k * r);
}

void aux_psi_hess(double k, const double* x, int d, double* hess) {
  double r2 = 0.0;
  for (int i = 0; i < d; ++i) r2 += x[i] * x[i];
  const double r = std::sqrt(r2);
  if (r / k > 700.0) {
    std::fill(hess, hess + std::size_t(d) * d, 0.0);
    return;
  }
  if (r < 1e-14) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        hess[std::size_t(i) * d + j] = (i == j) ? -1.0 / (k * k) : 0.0;
    return;
  }
  const double s = r / k;
  const double C = 1.0 / std::cosh(s);
  const double Tn = std::tanh(s);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const double dij = (i == j) ? 1.0 : 0.0;
      hess[std::size_t(i) * d + j] =
          C * ((Tn * Tn - C * C) * x[i] * x[j] / (k * k * r2) +
               (Tn / k) * (x[i] * x[j] / (r2 * r) - dij / r));
    }
}

std::vector<LyapunovResult> lyapunov_check(const Coefficients& co,
                                           const GridSpec& g,
                                           const std::vector<double>& ks,
                                           double t) {
  g.validate();
  if (co.d != g.d) throw invalid_spec("coefficient/grid dimension mismatch");
  if (ks.empty()) throw invalid_spec("at least one k value is required");
  for (double k : ks)
    if (!(k > 0.0)) throw invalid_spec("k values must be positive");
  if (!co.a || !co.b || !co.c)
    throw invalid_spec("coefficient functions must all be set");

  const int d = co.d;
  const double h = kFdStep;
  const std::size_t cells = g.cells();

  std::vector<LyapunovResult> out;
  out.reserve(ks.size());

  std::vector<double> a0(std::size_t(d) * d), ap(std::size_t(d) * d),
      am(std::size_t(d) * d), app(std::size_t(d) * d), b0(d), bp(d), bm(d);
  std::vector<double> grad(d), hess(std::size_t(d) * d);
  // per-point derived quantities, reused across k values
  std::vector<double> da(std::size_t(d) * d);     // da[i*d+j] = d a_ij / d x_j
  std::vector<double> d2a(std::size_t(d) * d);    // d^2 a_ij / d x_i d x_j
  std::vector<double> div_b_store(cells);
  std::vector<double> cvals(cells);
  std::vector<double> a_store(cells * std::size_t(d) * d);
  std::vector<double> b_store(cells * std::size_t(d));
  std::vector<double> da_store(cells * std::size_t(d) * d);
  std::vector<double> d2a_sum(cells);

  double x[3] = {0.0, 0.0, 0.0}, xs[3];

  for (std::size_t f = 0; f < cells; ++f) {
    const auto idx = g.unflatten(f);
    for (int i = 0; i < d; ++i) x[i] = g.coord_centered(idx[i]);

    co.a(t, x, a0.data());
    co.b(t, x, b0.data());
    cvals[f] = co.c(t, x);
    std::copy(a0.begin(), a0.end(), &a_store[f * std::size_t(d) * d]);
    std::copy(b0.begin(), b0.end(), &b_store[f * std::size_t(d)]);

    double div_b = 0.0;
    double d2sum = 0.0;
    for (int j = 0; j < d; ++j) {
      std::copy(x, x + d, xs);
      xs[j] += h;
      co.a(t, xs, ap.data());
      co.b(t, xs, bp.data());
      xs[j] -= 2.0 * h;
      co.a(t, xs, am.data());
      co.b(t, xs, bm.data());
      for (int i = 0; i < d; ++i)
        da[std::size_t(i) * d + j] = (ap[std::size_t(i) * d + j] -
                                      am[std::size_t(i) * d + j]) /
                                     (2.0 * h);
      div_b += (bp[j] - bm[j]) / (2.0 * h);
      // diagonal second derivative contributes to d2a for i == j
      d2sum += (ap[std::size_t(j) * d + j] - 2.0 * a0[std::size_t(j) * d + j] +
                am[std::size_t(j) * d + j]) /
               (h * h);
    }
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        if (i == j) continue;
        double cross = 0.0;
        for (int si = -1; si <= 1; si += 2)
          for (int sj = -1; sj <= 1; sj += 2) {
            std::copy(x, x + d, xs);
            xs[i] += si * h;
            xs[j] += sj * h;
            co.a(t, xs, app.data());
            cross += double(si * sj) * app[std::size_t(i) * d + j];
          }
        d2sum += cross / (4.0 * h * h);
      }
    std::copy(da.begin(), da.end(), &da_store[f * std::size_t(d) * d]);
    div_b_store[f] = div_b;
    d2a_sum[f] = d2sum;
  }

  for (double k : ks) {
    LyapunovResult res;
    res.k = k;
    res.max_residual = -std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < cells; ++f) {
      const auto idx = g.unflatten(f);
      for (int i = 0; i < d; ++i) x[i] = g.coord_centered(idx[i]);
      const double psi = aux_psi(k, x, d);
      aux_psi_grad(k, x, d, grad.data());
      aux_psi_hess(k, x, d, hess.data());

      const double* af = &a_store[f * std::size_t(d) * d];
      const double* bf = &b_store[f * std::size_t(d)];
      const double* daf = &da_store[f * std::size_t(d) * d];

      double val = 0.0;
      for (int i = 0; i < d; ++i) {
        double drift_i = -bf[i];
        for (int j = 0; j < d; ++j) {
          val += af[std::size_t(i) * d + j] * hess[std::size_t(i) * d + j];
          drift_i += 2.0 * daf[std::size_t(i) * d + j];
        }
        val += drift_i * grad[i];
      }
      val += (d2a_sum[f] - div_b_store[f] + cvals[f] - 4.0 * co.K) * psi;

      if (val > res.max_residual) {
        res.max_residual = val;
        res.argmax = {x[0], d > 1 ? x[1] : 0.0, d > 2 ? x[2] : 0.0};
      }
    }
    out.push_back(res);
  }
  return out;
}

// ---------------------------------------------------------------------------
// norms and statistics

double discrete_bessel_norm(const GridSpec& g, const std::vector<double>& u,
                            double gamma, double p) {
  g.validate();
  if (u.size() != g.cells()) throw invalid_spec("field size mismatch");
  if (!(p >= 1.0)) throw invalid_spec("p must be >= 1");

  FftNd fft(g.d, std::size_t(g.n));
  std::vector<cplx> buf(g.cells());
  for (std::size_t f = 0; f < g.cells(); ++f) buf[f] = cplx(u[f], 0.0);
  fft.forward(buf.data());
  for (std::size_t f = 0; f < g.cells(); ++f) {
    const auto idx = g.unflatten(f);
    double xi2 = 0.0;
    for (int i = 0; i < g.d; ++i) {
      const double fr = g.frequency(idx[i]);
      xi2 += fr * fr;
    }
    buf[f] *= std::pow(1.0 + xi2, 0.5 * gamma);
  }
  fft.inverse(buf.data());

  const double cellvol = g.cell_volume();
  double acc = 0.0;
  for (std::size_t f = 0; f < g.cells(); ++f)
    acc += std::pow(std::abs(buf[f].real()), p);
  return std::pow(cellvol * acc, 1.0 / p);
}

MassDriftStat mass_martingale_stat(const std::vector<TrajectoryRecord>& recs) {
  std::vector<double> drifts;
  drifts.reserve(recs.size());
  for (const auto& r : recs) {
    if (r.blew_up) continue;  // final mass is not at the common horizon
    if (r.mass.size() < 2) throw invalid_spec("record has no mass series");
    drifts.push_back(r.mass.back() - r.mass.front());
  }
  if (drifts.size() < 2)
    throw invalid_spec("need at least two completed paths");

  MassDriftStat st;
  st.n = int(drifts.size());
  st.mean = std::accumulate(drifts.begin(), drifts.end(), 0.0) / double(st.n);
  double ss = 0.0;
  for (double v : drifts) ss += (v - st.mean) * (v - st.mean);
  st.se = std::sqrt(ss / double(st.n - 1)) / std::sqrt(double(st.n));
  st.z = st.se > 0.0 ? st.mean / st.se : (st.mean == 0.0 ? 0.0 : 1e300);
  return st;
}

}  // namespace spde
