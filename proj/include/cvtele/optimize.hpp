#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace cvtele::opt {

struct Maximum1d {
  double arg = 0.0;
  double value = 0.0;
};

/// Golden-section search for the maximum of f on [lo, hi] until the bracket
/// is narrower than tol.
template <class F>
Maximum1d golden_section_max(const F& f, double lo, double hi, double tol) {
  const double invphi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - invphi * (hi - lo);
  double d = lo + invphi * (hi - lo);
  double fc = f(c), fd = f(d);
  while (hi - lo > tol) {
    if (fc >= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - invphi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + invphi * (hi - lo);
      fd = f(d);
    }
  }
  const double x = 0.5 * (lo + hi);
  return {x, f(x)};
}

/// Coarse grid over [lo, hi] followed by golden-section refinement inside the
/// two cells around the best grid point. Endpoint optima are reported as-is.
template <class F>
Maximum1d grid_then_golden_max(const F& f, double lo, double hi, double step,
                               double tol) {
  if (!(hi > lo) || !(step > 0.0))
    throw std::invalid_argument("grid_then_golden_max: bad bracket");
  const int n = static_cast<int>(std::ceil((hi - lo) / step - 1e-9));
  int best = 0;
  double best_val = f(lo);
  for (int i = 1; i <= n; ++i) {
    const double v = f(std::min(hi, lo + i * step));
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  const double a = std::max(lo, lo + (best - 1) * step);
  const double b = std::min(hi, lo + (best + 1) * step);
  Maximum1d refined = golden_section_max(f, a, b, tol);
  const double at_grid = std::min(hi, lo + best * step);
  if (best_val > refined.value) return {at_grid, best_val};
  return refined;
}

struct NelderMeadOptions {
  double initial_step = 1.0;
  double x_tol = 1e-6;
  double f_tol = 1e-12;
  int max_evaluations = 2000;
};

template <int Dim>
struct MinimumNd {
  Eigen::Matrix<double, Dim, 1> arg;
  double value;
  int evaluations;
};

/// Nelder-Mead simplex minimisation (standard reflection/expansion/
/// contraction/shrink coefficients 1, 2, 1/2, 1/2).
template <int Dim, class F>
MinimumNd<Dim> nelder_mead(const F& f, const Eigen::Matrix<double, Dim, 1>& start,
                           const NelderMeadOptions& options = {}) {
  using Point = Eigen::Matrix<double, Dim, 1>;
  std::array<Point, Dim + 1> simplex;
  std::array<double, Dim + 1> values;
  int evaluations = 0;
  auto eval = [&](const Point& p) {
    ++evaluations;
    return f(p);
  };

  simplex[0] = start;
  values[0] = eval(start);
  for (int i = 0; i < Dim; ++i) {
    simplex[i + 1] = start;
    simplex[i + 1][i] += options.initial_step;
    values[i + 1] = eval(simplex[i + 1]);
  }

  std::array<int, Dim + 1> order;
  while (evaluations < options.max_evaluations) {
    for (int i = 0; i <= Dim; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return values[a] < values[b]; });
    const int best = order[0], worst = order[Dim], second = order[Dim - 1];

    double spread = 0.0;
    for (int i = 1; i <= Dim; ++i)
      spread = std::max(spread, (simplex[order[i]] - simplex[best]).cwiseAbs().maxCoeff());
    if (spread < options.x_tol &&
        std::abs(values[worst] - values[best]) < options.f_tol)
      break;

    Point centroid = Point::Zero();
    for (int i = 0; i < Dim; ++i) centroid += simplex[order[i]];
    centroid /= Dim;

    const Point reflected = centroid + (centroid - simplex[worst]);
    const double fr = eval(reflected);
    if (fr < values[best]) {
      const Point expanded = centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = eval(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        values[worst] = fe;
      } else {
        simplex[worst] = reflected;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = reflected;
      values[worst] = fr;
      continue;
    }
    const bool outside = fr < values[worst];
    const Point contracted = outside ? Point(centroid + 0.5 * (reflected - centroid))
                                     : Point(centroid + 0.5 * (simplex[worst] - centroid));
    const double fc = eval(contracted);
    if (fc < (outside ? fr : values[worst])) {
      simplex[worst] = contracted;
      values[worst] = fc;
      continue;
    }
    for (int i = 1; i <= Dim; ++i) {
      const int idx = order[i];
      simplex[idx] = simplex[best] + 0.5 * (simplex[idx] - simplex[best]);
      values[idx] = eval(simplex[idx]);
    }
  }

  int best = 0;
  for (int i = 1; i <= Dim; ++i)
    if (values[i] < values[best]) best = i;
  return {simplex[best], values[best], evaluations};
}

}  // namespace cvtele::opt
