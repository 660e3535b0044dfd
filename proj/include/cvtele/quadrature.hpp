#pragma once

#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

namespace cvtele::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
inline constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
inline constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel gauss_kronrod_15(const F& f, double a, double b) {
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(centre);
  double kronrod = kKronrodWeights[7] * fc;
  double gauss = kGaussWeights[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kKronrodNodes[i];
    const double pair = f(centre - dx) + f(centre + dx);
    kronrod += kKronrodWeights[i] * pair;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * pair;
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod integration of f over [a, b].
///
/// Panels are bisected in order of decreasing error estimate until the summed
/// estimate satisfies max(abs_tol, rel_tol * |I|) or max_panels is reached.
template <class F>
Result integrate(const F& f, double a, double b, double rel_tol = 1e-10,
                 double abs_tol = 0.0, int max_panels = 4000) {
  if (!(std::isfinite(a) && std::isfinite(b)))
    throw std::invalid_argument("quad::integrate: bounds must be finite");
  if (a == b) return {};
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }

  std::priority_queue<detail::Panel> panels;
  panels.push(detail::gauss_kronrod_15(f, a, b));
  double total = panels.top().value;
  double error = panels.top().error;
  int evaluations = 15;

  while (static_cast<int>(panels.size()) < max_panels) {
    const double target = std::max(abs_tol, rel_tol * std::abs(total));
    if (error <= target) break;
    const detail::Panel worst = panels.top();
    // Stop when the interval cannot be split any further in double precision.
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) break;
    panels.pop();
    const auto left = detail::gauss_kronrod_15(f, worst.a, mid);
    const auto right = detail::gauss_kronrod_15(f, mid, worst.b);
    evaluations += 30;
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    panels.push(left);
    panels.push(right);
  }

  // Re-sum to shed the drift of the running updates.
  double resummed = 0.0, err = 0.0;
  while (!panels.empty()) {
    resummed += panels.top().value;
    err += panels.top().error;
    panels.pop();
  }
  return {sign * resummed, err, evaluations};
}

/// Iterated 2-D integral over the rectangle [ax, bx] x [ay, by].
template <class F>
Result integrate_2d(const F& f, double ax, double bx, double ay, double by,
                    double rel_tol = 1e-10, double abs_tol = 0.0) {
  int evaluations = 0;
  auto inner = [&](double x) {
    const auto r = integrate([&](double y) { return f(x, y); }, ay, by,
                             rel_tol, abs_tol * 1e-2);
    evaluations += r.evaluations;
    return r.value;
  };
  Result outer = integrate(inner, ax, bx, rel_tol, abs_tol);
  outer.evaluations = evaluations;
  return outer;
}

}  // namespace cvtele::quad
