#include "spde/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spde/fft.hpp"
#include "spde/grid.hpp"
#include "spde/quadrature.hpp"

namespace spde {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

CovarianceModel CovarianceModel::white(int d) {
  CovarianceModel m;
  m.kind = CovKind::white;
  m.d = d;
  m.validate();
  return m;
}

CovarianceModel CovarianceModel::riesz(int d, double alpha) {
  CovarianceModel m;
  m.kind = CovKind::riesz;
  m.d = d;
  m.alpha = alpha;
  m.validate();
  return m;
}

CovarianceModel CovarianceModel::gaussian(int d, double rate) {
  CovarianceModel m;
  m.kind = CovKind::gaussian;
  m.d = d;
  m.rate = rate;
  m.validate();
  return m;
}

void CovarianceModel::validate() const {
  if (d < 1 || d > 3) throw invalid_spec("covariance: d must be 1, 2 or 3");
  switch (kind) {
    case CovKind::white:
      if (d != 1) throw invalid_spec("covariance: white noise requires d = 1");
      break;
    case CovKind::riesz:
      if (!(alpha > 0.0 && alpha < d))
        throw invalid_spec("covariance: riesz needs 0 < alpha < d");
      break;
    case CovKind::gaussian:
      if (!(rate > 0.0))
        throw invalid_spec("covariance: gaussian needs rate > 0");
      break;
  }
}

std::string CovarianceModel::name() const {
  switch (kind) {
    case CovKind::white:
      return "white";
    case CovKind::riesz:
      return "riesz";
    case CovKind::gaussian:
      return "gaussian";
  }
  return "?";
}

std::optional<double> eval_covariance(const CovarianceModel& m, double r) {
  m.validate();
  if (r < 0.0) throw invalid_spec("eval_covariance: radius must be >= 0");
  switch (m.kind) {
    case CovKind::white:
      if (r == 0.0) return std::nullopt;  // point mass, no density value
      return 0.0;
    case CovKind::riesz:
      if (r == 0.0) return std::nullopt;  // pole
      return std::pow(r, -m.alpha);
    case CovKind::gaussian:
      return std::exp(-m.rate * r * r);
  }
  return std::nullopt;
}

double spectral_density(const CovarianceModel& m, double xi_norm) {
  m.validate();
  if (xi_norm < 0.0) throw invalid_spec("spectral_density: |xi| must be >= 0");
  switch (m.kind) {
    case CovKind::white:
      return std::pow(2.0 * kPi, -0.5);
    case CovKind::gaussian:
      return std::pow(2.0 * m.rate, -0.5 * m.d) *
             std::exp(-xi_norm * xi_norm / (4.0 * m.rate));
    case CovKind::riesz: {
      if (xi_norm == 0.0) return kInf;
      const double c = std::pow(2.0, 0.5 * m.d - m.alpha) *
                       std::tgamma(0.5 * (m.d - m.alpha)) /
                       std::tgamma(0.5 * m.alpha);
      return c * std::pow(xi_norm, m.alpha - m.d);
    }
  }
  return 0.0;
}

SpectralMeasure SpectralMeasure::for_model(const CovarianceModel& m) {
  m.validate();
  SpectralMeasure s;
  s.model = m;
  s.k = m.kind == CovKind::riesz ? m.d - m.alpha + 0.5 : 0.0;
  return s;
}

SpectralMeasure SpectralMeasure::with_k(const CovarianceModel& m, double k) {
  m.validate();
  if (k < 0.0) throw invalid_spec("spectral measure: k must be >= 0");
  if (m.kind == CovKind::riesz && !(k > m.d - m.alpha))
    throw invalid_spec(
        "spectral measure: riesz tempering requires k > d - alpha");
  SpectralMeasure s;
  s.model = m;
  s.k = k;
  return s;
}

double SpectralMeasure::mu_radial_density(double r) const {
  switch (model.kind) {
    case CovKind::white:
      throw invalid_spec("white measure is an atom, not a density");
    case CovKind::riesz:
      return std::pow(r, -model.alpha);
    case CovKind::gaussian:
      return std::exp(-model.rate * r * r);
  }
  return 0.0;
}

double sphere_surface(int d) {
  return 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d);
}

double bessel_constant(double gamma, int d) {
  if (!(gamma > 0.0)) throw invalid_spec("bessel_constant: gamma must be > 0");
  return std::pow(4.0 * kPi, -0.5 * d) / std::tgamma(0.5 * gamma);
}

double bessel_kernel(double gamma, int d, double r) {
  if (d < 1 || d > 3) throw invalid_spec("bessel_kernel: d must be 1, 2 or 3");
  if (!(gamma > 0.0) || gamma > d + 2.0)
    throw invalid_spec("bessel_kernel: gamma must lie in (0, d+2]");
  if (!(r >= 0.0)) throw invalid_spec("bessel_kernel: radius must be >= 0");
  const double c = bessel_constant(gamma, d);
  if (r == 0.0) {
    if (gamma > d) return c * std::tgamma(0.5 * (gamma - d));
    return kInf;
  }
  if (r > 750.0) return 0.0;  // below double underflow of the e^{-r} envelope
  const double e = 0.5 * (gamma - d);
  auto integrand = [e, r](double u) {
    return std::exp(e * u - r * r * std::exp(u) - 0.25 * std::exp(-u));
  };
  const double u_lo = -10.0;
  const double u_hi = std::max(10.0, std::log(800.0) - 2.0 * std::log(r));
  const double I =
      integrate_or_throw(integrand, u_lo, u_hi, 1e-280, 1e-10, 8000);
  return c * std::pow(r, gamma - d) * I;
}

namespace {

// Equal-volume radius of one grid cell.
double cell_ball_radius(int d, double dx) {
  switch (d) {
    case 1:
      return 0.5 * dx;
    case 2:
      return dx / std::sqrt(kPi);
    default:
      return dx * std::cbrt(3.0 / (4.0 * kPi));
  }
}

// Ball average of R_gamma^power around the origin (pole regularization).
double pole_cell_average(double gamma, double power, int d, double dx) {
  if (power * (gamma - d) <= -d)
    throw invalid_spec("kernel power is not integrable at the pole");
  const double rho = cell_ball_radius(d, dx);
  auto g = [&](double r) {
    return std::pow(bessel_kernel(gamma, d, r), power) * std::pow(r, d - 1);
  };
  const double integral = integrate_or_throw(g, 0.0, rho, 1e-12, 1e-8, 8000);
  return d * integral / std::pow(rho, d);
}

// Interval average of R_gamma^power over [x-dx/2, x+dx/2], d = 1, 0 outside.
double interval_average_1d(double gamma, double power, double x, double dx) {
  auto g = [&](double t) {
    return std::pow(bessel_kernel(gamma, 1, std::abs(t)), power);
  };
  return integrate_or_throw(g, x - 0.5 * dx, x + 0.5 * dx, 1e-12, 1e-8, 4000) /
         dx;
}

// Fine radial profile of R_gamma^power for grid fills (log-log interpolation).
class RadialProfile {
 public:
  RadialProfile(double gamma, double power, int d, double r_min, double r_max,
                int m = 3072) {
    logr_.reserve(m);
    logv_.reserve(m);
    const double l0 = std::log(r_min), l1 = std::log(r_max);
    for (int i = 0; i < m; ++i) {
      const double lr = l0 + (l1 - l0) * i / (m - 1);
      logr_.push_back(lr);
      logv_.push_back(power * std::log(bessel_kernel(gamma, d, std::exp(lr))));
    }
  }

  double eval(double r) const {
    const double lr = std::log(r);
    if (lr <= logr_.front())
      return std::exp(logv_.front() + (lr - logr_.front()) * slope_front());
    if (lr >= logr_.back()) return std::exp(logv_.back());
    const double step = (logr_.back() - logr_.front()) / (logr_.size() - 1);
    const std::size_t i =
        std::min(logr_.size() - 2,
                 static_cast<std::size_t>((lr - logr_.front()) / step));
    const double w = (lr - logr_[i]) / (logr_[i + 1] - logr_[i]);
    return std::exp(logv_[i] * (1.0 - w) + logv_[i + 1] * w);
  }

 private:
  double slope_front() const {
    return (logv_[1] - logv_[0]) / (logr_[1] - logr_[0]);
  }
  std::vector<double> logr_, logv_;
};

}  // namespace

double KernelTable::interpolate(double r, double below_first_exponent) const {
  if (radius.size() < 3) throw invalid_spec("kernel table too short");
  const double r1 = radius[1];
  if (r <= 0.0) throw invalid_spec("kernel table interpolation needs r > 0");
  if (r < r1) return value[1] * std::pow(r / r1, below_first_exponent);
  if (r >= radius.back()) return 0.0;
  const double step = radius[1] - radius[0];
  std::size_t i = std::min(radius.size() - 2,
                           static_cast<std::size_t>(r / step));
  if (radius[i] > r && i > 0) --i;
  const double w = (r - radius[i]) / (radius[i + 1] - radius[i]);
  if (value[i] > 0.0 && value[i + 1] > 0.0) {
    return std::exp(std::log(value[i]) * (1.0 - w) +
                    std::log(value[i + 1]) * w);
  }
  return value[i] * (1.0 - w) + value[i + 1] * w;
}

KernelTable tabulate_bessel_kernel(double gamma, double power, int d, int n,
                                   double L) {
  if (n < 16 || (n & (n - 1)) != 0)
    throw invalid_spec("kernel table: n must be a power of two >= 16");
  if (!(L > 0.0)) throw invalid_spec("kernel table: L must be > 0");
  const double dx = L / n;
  KernelTable t;
  t.kind = KernelTable::Kind::kernel;
  t.gamma = gamma;
  t.power = power;
  t.d = d;
  t.dx = dx;
  t.L = L;
  t.radius.resize(n / 2 + 1);
  t.value.resize(n / 2 + 1);
  for (int j = 0; j <= n / 2; ++j) {
    const double r = j * dx;
    t.radius[j] = r;
    if (j == 0) {
      t.value[j] = power * (gamma - d) > -d
                       ? pole_cell_average(gamma, power, d, dx)
                       : kInf;
    } else if (d == 1 && r < 1.0) {
      t.value[j] = interval_average_1d(gamma, power, r, dx);
    } else {
      t.value[j] = std::pow(bessel_kernel(gamma, d, r), power);
    }
  }
  return t;
}

KernelTable kernel_self_convolution(double gamma, double power, int d, int n,
                                    double L) {
  if (power * (gamma - d) <= -d)
    throw invalid_spec("self convolution: kernel power not integrable");
  GridSpec grid{d, n, L};
  grid.validate();
  const double dx = grid.spacing();

  // Sample R^power on the periodic grid, pole cell ball-averaged.
  std::vector<cplx> s(grid.cells());
  RadialProfile prof(gamma, power, d, dx / 256.0, std::sqrt(double(d)) * L);
  for (std::size_t f = 0; f < grid.cells(); ++f) {
    auto idx = grid.unflatten(f);
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) {
      const double x = grid.coord_centered(idx[a]);
      r2 += x * x;
    }
    const double r = std::sqrt(r2);
    s[f] = r == 0.0 ? pole_cell_average(gamma, power, d, dx) : prof.eval(r);
  }

  FftNd fft(d, static_cast<std::size_t>(n));
  fft.forward(s.data());
  for (auto& z : s) z *= z;
  fft.inverse(s.data());

  KernelTable t;
  t.kind = KernelTable::Kind::self_convolution;
  t.gamma = gamma;
  t.power = power;
  t.d = d;
  t.dx = dx;
  t.L = L;
  t.radius.resize(n / 2 + 1);
  t.value.resize(n / 2 + 1);
  const double cellvol = grid.cell_volume();
  for (int j = 0; j <= n / 2; ++j) {
    std::array<int, 3> idx{0, 0, 0};
    idx[0] = j;
    t.radius[j] = j * dx;
    t.value[j] = s[grid.flatten(idx)].real() * cellvol;
  }
  return t;
}

namespace {

// integral_1^inf g(rho) d rho via rho = e^u.
double tail_integral(const std::function<double(double)>& g, double u_max) {
  auto h = [&](double u) {
    const double rho = std::exp(u);
    return g(rho) * rho;
  };
  return integrate_or_throw(h, 0.0, u_max, 1e-10, 1e-7, 6000);
}

}  // namespace

EstimatedConstants estimate_constants(const SpectralMeasure& mu, double gamma,
                                      double s, int d) {
  mu.model.validate();
  if (mu.model.d != d)
    throw invalid_spec("estimate_constants: dimension mismatch");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw invalid_spec("estimate_constants: gamma must lie in (0, 1)");
  if (!(s > 1.0))  // s = +infinity allowed
    throw invalid_spec("estimate_constants: s must be > 1 (or infinite)");

  EstimatedConstants out;
  out.k = mu.k;
  out.r = std::isinf(s) ? 1.0 : s / (s - 1.0);
  const double r = out.r;
  const double order = 1.0 - gamma;     // Bessel order of the kernel in I
  const double e0 = r * (order - d);    // near-origin envelope exponent
  const double S = sphere_surface(d);
  const double k = mu.k;

  // A = integral (1+|x|^2)^(-k/2) mu(dx)
  switch (mu.model.kind) {
    case CovKind::white:
      out.A = 1.0;
      break;
    case CovKind::gaussian: {
      const double c = mu.model.rate;
      auto g = [&](double rho) {
        return std::pow(1.0 + rho * rho, -0.5 * k) *
               std::exp(-c * rho * rho) * std::pow(rho, d - 1);
      };
      const double R = std::sqrt(745.0 / c) + 3.0;
      out.A = S * integrate_or_throw(g, 0.0, R, 1e-10, 1e-7, 6000);
      break;
    }
    case CovKind::riesz: {
      const double a = mu.model.alpha;
      auto g = [&](double rho) {
        return std::pow(1.0 + rho * rho, -0.5 * k) * std::pow(rho, d - 1 - a);
      };
      const double decay = k - (d - a);  // > 0 by measure validation
      const double u_max = std::min(4000.0, 45.0 / std::max(decay, 0.05));
      out.A = S * (integrate_or_throw(g, 0.0, 1.0, 1e-10, 1e-7, 6000) +
                   tail_integral(g, u_max));
      break;
    }
  }

  // I = integral (R_order^r * R_order^r)(x) (1+|x|^2)^(k(r-1)/2) mu(dx)
  const bool conv_bounded = 2.0 * r * (order - d) > -d;
  if (mu.model.kind == CovKind::white) {
    out.i_finite = conv_bounded;
    if (!out.i_finite) {
      out.I = kInf;
      return out;
    }
    // atom at the origin: I = (R^r * R^r)(0) = integral R^{2r}
    auto g = [&](double rho) {
      return std::pow(bessel_kernel(order, d, rho), 2.0 * r) *
             std::pow(rho, d - 1);
    };
    out.I = S * (integrate_or_throw(g, 0.0, 2.0, 1e-11, 1e-8, 8000) +
                 integrate_or_throw(g, 2.0, 80.0, 1e-11, 1e-8, 8000));
    return out;
  }

  const double alpha_eff =
      mu.model.kind == CovKind::riesz ? mu.model.alpha : 0.0;
  out.i_finite = conv_bounded ? (alpha_eff < d) : (e0 - alpha_eff + d > 0.0);
  if (!out.i_finite) {
    out.I = kInf;
    return out;
  }

  // Tabulate the self convolution and integrate it against mu.
  int tab_n = d == 1 ? 8192 : (d == 2 ? 512 : 128);
  double tab_L = d == 1 ? 40.0 : (d == 2 ? 24.0 : 12.0);
  KernelTable conv = kernel_self_convolution(order, r, d, tab_n, tab_L);
  const double ex = conv_bounded ? 0.0 : e0;
  auto weight = [&](double rho) {
    return std::pow(1.0 + rho * rho, 0.5 * k * (r - 1.0)) *
           mu.mu_radial_density(rho) * std::pow(rho, d - 1);
  };

  // analytic power-law piece below the first tabulated radius
  const double r1 = conv.radius[1];
  const double v1 = conv.value[1];
  double acc = S * v1 * std::pow(r1, d - alpha_eff) / (ex + d - alpha_eff) *
               std::pow(1.0 + r1 * r1, 0.5 * k * (r - 1.0));

  // composite Gauss rule per table segment (integrand smooth within a cell)
  static const double gl_x[4] = {-0.861136311594052575224, -0.339981043584856264803,
                                 0.339981043584856264803, 0.861136311594052575224};
  static const double gl_w[4] = {0.347854845137453857373, 0.652145154862546142627,
                                 0.652145154862546142627, 0.347854845137453857373};
  for (std::size_t i = 1; i + 1 < conv.radius.size(); ++i) {
    const double a = conv.radius[i], b = conv.radius[i + 1];
    const double c0 = 0.5 * (a + b), h = 0.5 * (b - a);
    double seg = 0.0;
    for (int q = 0; q < 4; ++q) {
      const double rho = c0 + h * gl_x[q];
      seg += gl_w[q] * conv.interpolate(rho, ex) * weight(rho);
    }
    acc += S * seg * h;
  }
  out.I = acc;
  return out;
}

}  // namespace spde
