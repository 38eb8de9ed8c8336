#include "spde/quadrature.hpp"

#include <cmath>
#include <queue>
#include <vector>

#include "spde/errors.hpp"

namespace spde {

namespace {

// 15-point Kronrod nodes/weights with embedded 7-point Gauss rule on [-1, 1].
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Interval {
  double a, b, value, error;
};
struct ByError {
  bool operator()(const Interval& p, const Interval& q) const {
    return p.error < q.error;
  }
};

Interval eval_gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kron = kWgk[7] * fc;
  double gauss = kWg[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double fp = f(c + h * kXgk[i]);
    const double fm = f(c - h * kXgk[i]);
    kron += kWgk[i] * (fp + fm);
    if (i % 2 == 1) gauss += kWg[i / 2] * (fp + fm);
  }
  kron *= h;
  gauss *= h;
  return Interval{a, b, kron, std::abs(kron - gauss)};
}

}  // namespace

QuadResult integrate(const std::function<double(double)>& f, double a,
                     double b, double abs_tol, double rel_tol, int max_subdiv) {
  QuadResult res;
  if (a == b) {
    res.converged = true;
    return res;
  }
  std::priority_queue<Interval, std::vector<Interval>, ByError> heap;
  Interval whole = eval_gk15(f, a, b);
  double total = whole.value;
  double err = whole.error;
  heap.push(whole);
  int splits = 0;
  while (err > std::max(abs_tol, rel_tol * std::abs(total)) &&
         splits < max_subdiv) {
    Interval worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid == worst.a || mid == worst.b) {
      // interval is at floating point resolution; accept its estimate
      worst.error = 0.0;
      heap.push(worst);
      ++splits;
      continue;
    }
    Interval left = eval_gk15(f, worst.a, mid);
    Interval right = eval_gk15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++splits;
  }
  res.value = total;
  res.abs_error = err;
  res.subdivisions = splits;
  res.converged = err <= std::max(abs_tol, rel_tol * std::abs(total));
  return res;
}

double integrate_or_throw(const std::function<double(double)>& f, double a,
                          double b, double abs_tol, double rel_tol,
                          int max_subdiv) {
  QuadResult r = integrate(f, a, b, abs_tol, rel_tol, max_subdiv);
  if (!r.converged)
    throw numeric_error("quadrature failed to converge on [" +
                        std::to_string(a) + ", " + std::to_string(b) + "]");
  return r.value;
}

}  // namespace spde
