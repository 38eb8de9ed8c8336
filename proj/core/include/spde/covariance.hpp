#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spde/errors.hpp"

namespace spde {

// Spatial covariance models for the driving noise.  All are spatially
// homogeneous: the noise is white in time with E[F(t,A)F(s,B)] determined by
// a covariance kernel f via t^s (f, 1_A * ~1_B).  Fourier transforms use the
// symmetric normalization FT(f)(xi) = (2*pi)^(-d/2) integral e^(-i xi.x) f(x) dx.
enum class CovKind { white, riesz, gaussian };

struct CovarianceModel {
  CovKind kind = CovKind::gaussian;
  int d = 1;
  double alpha = 0.0;  // riesz: f(x) = |x|^(-alpha), 0 < alpha < d
  double rate = 1.0;   // gaussian: f(x) = exp(-rate*|x|^2), rate > 0

  static CovarianceModel white(int d);
  static CovarianceModel riesz(int d, double alpha);
  static CovarianceModel gaussian(int d, double rate);

  void validate() const;
  // Bounded continuous kernels qualify for the widest solvability regime.
  bool bounded_continuous() const { return kind == CovKind::gaussian; }
  std::string name() const;
};

// Pointwise kernel value at radius r = |x|; std::nullopt marks SINGULAR
// (no finite pointwise value: the white-noise atom and the Riesz pole).
std::optional<double> eval_covariance(const CovarianceModel& m, double r);

// Density of the dual (frequency side) measure at |xi| = xi_norm, i.e. the
// Fourier transform of the kernel in the symmetric normalization:
//   white:    (2*pi)^(-1/2)                          (d = 1)
//   gaussian: (2*rate)^(-d/2) exp(-|xi|^2/(4*rate))
//   riesz:    2^(d/2-alpha) * Gamma((d-alpha)/2)/Gamma(alpha/2) * |xi|^(alpha-d)
// The Riesz density diverges at xi = 0 (returns +infinity there).
double spectral_density(const CovarianceModel& m, double xi_norm);

// Spatial-side measure mu of the kernel (f, psi) = integral psi d(mu),
// carried with a tempering exponent k such that
// integral (1+|x|^2)^(-k/2) mu(dx) < infinity.
struct SpectralMeasure {
  CovarianceModel model;
  double k = 0.0;

  // Default tempering: 0 for white/gaussian, d - alpha + 1/2 for riesz.
  static SpectralMeasure for_model(const CovarianceModel& m);
  static SpectralMeasure with_k(const CovarianceModel& m, double k);

  bool atom_at_origin() const { return model.kind == CovKind::white; }
  // Radial density of mu at radius r > 0 (riesz/gaussian only).
  double mu_radial_density(double r) const;
};

// Normalization constant of the heat-kernel representation of the Bessel
// potential kernel R_gamma.  Fixed by requiring
//   FT(R_gamma)(xi) = (2*pi)^(-d/2) * (1+|xi|^2)^(-gamma/2),
// equivalently integral R_gamma = 1, which gives c(gamma,d) =
// (4*pi)^(-d/2) / Gamma(gamma/2).
double bessel_constant(double gamma, int d);

// R_gamma(|x| = r) evaluated by adaptive quadrature of
//   c(gamma,d) r^(gamma-d) integral_0^inf t^((gamma-d-2)/2)
//                                        exp(-r^2 t - 1/(4t)) dt
// after the substitution t = e^u that tames both endpoints.
// Requires 0 < gamma <= d+2.  Returns +infinity at r = 0 when gamma <= d.
double bessel_kernel(double gamma, int d, double r);

// Radial tabulation of R_gamma^power or of its self-convolution
// (R_gamma^power * R_gamma^power) on a periodic grid profile.
struct KernelTable {
  enum class Kind { kernel, self_convolution };
  Kind kind = Kind::kernel;
  double gamma = 1.0;
  double power = 1.0;  // pointwise exponent r applied to R_gamma
  int d = 1;
  double dx = 0.0;  // grid spacing used for the tabulation
  double L = 0.0;   // box side used for the tabulation
  std::vector<double> radius;  // ascending, radius[0] = 0
  std::vector<double> value;

  // Linear interpolation in (log r, log v); power-law extension below the
  // first positive radius with the given exponent.
  double interpolate(double r, double below_first_exponent) const;
};

// Samples R_gamma^power on radii j*dx, j = 0..n/2, of a box of side L.
// Cells within |x| < 1 are cell-averaged (pole regularization), others take
// point values.
KernelTable tabulate_bessel_kernel(double gamma, double power, int d, int n,
                                   double L);

// (R_gamma^power * R_gamma^power) tabulated by discrete FFT convolution on a
// periodic d-dimensional grid (n points per axis, box side L); the returned
// profile runs along the first axis, radii j*dx for j = 0..n/2.
KernelTable kernel_self_convolution(double gamma, double power, int d, int n,
                                    double L);

// Integral constants controlling solvability:
//   A = integral (1+|x|^2)^(-k/2) mu(dx)
//   I = integral (R_(1-gamma)^r * R_(1-gamma)^r)(x) (1+|x|^2)^(k(r-1)/2) mu(dx)
// with r = s/(s-1) (r = 1 for s = infinity).  I may be infinite; finiteness
// is decided by the near-origin envelope exponent r*(1-gamma-d) of the
// self-convolution against the local behaviour of mu.
struct EstimatedConstants {
  double A = 0.0;
  double I = 0.0;        // +infinity when i_finite is false
  bool i_finite = true;
  double r = 1.0;        // conjugate exponent actually used
  double k = 0.0;        // tempering exponent actually used
};

EstimatedConstants estimate_constants(const SpectralMeasure& mu, double gamma,
                                      double s, int d);

// Surface area of the unit sphere in R^d.
double sphere_surface(int d);

}  // namespace spde
