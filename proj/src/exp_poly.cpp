#include "cvtele/exp_poly.hpp"

#include <cmath>

namespace cvtele {

namespace {

// Slowly varying exponentials (|rate| * span below this) are Taylor-expanded
// before taking antiderivatives; the remainder at order 18 is < 0.1^19 / 19!.
constexpr int kSeriesOrder = 18;
constexpr double kSeriesThreshold = 0.1;

// M(k, c) = integral of u^k e^{c u} over [0, 1].
// c >= 0: sum_n c^n / (n! (k+1+n)), all terms positive.
// c <  0: Kummer transform, e^c sum_n (-c)^n / ((k+1)(k+2)...(k+1+n)), all
// terms positive again. Both are stable for every k.
double unit_moment(int k, double c) {
  const double tol = 1e-17;
  double sum = 0.0;
  if (c >= 0.0) {
    double factor = 1.0;  // c^n / n!
    for (int n = 0; n < 2000; ++n) {
      const double term = factor / (k + 1 + n);
      sum += term;
      if (n > c && term < tol * sum) break;
      factor *= c / (n + 1);
    }
    return sum;
  }
  const double x = -c;
  double term = 1.0 / (k + 1);
  for (int n = 0; n < 2000; ++n) {
    sum += term;
    if (n > x && term < tol * sum) break;
    term *= x / (k + 2 + n);
  }
  return std::exp(c) * sum;
}

// Integral of t^k e^{rate t} over [0, x] for any real x.
double moment_from_zero(int k, double rate, double x) {
  if (x == 0.0) return 0.0;
  if (x > 0.0) return std::pow(x, k + 1) * unit_moment(k, rate * x);
  // t = -u maps [0, x] onto [0, |x|] with t^k dt = (-1)^{k+1} u^k du.
  const double sgn = (k % 2 == 0) ? -1.0 : 1.0;
  return sgn * std::pow(-x, k + 1) * unit_moment(k, rate * x);
}

}  // namespace

ExpPoly ExpPoly::term(double coef, int power, double rate) {
  ExpPoly e;
  e.add_term(coef, power, rate);
  return e;
}

ExpPoly ExpPoly::linear(double c0, double c1) {
  ExpPoly e;
  e.add_term(c0, 0, 0.0);
  e.add_term(c1, 1, 0.0);
  return e;
}

void ExpPoly::add_term(double coef, int power, double rate) {
  if (coef == 0.0) return;
  for (auto& t : terms_) {
    if (t.power == power && t.rate == rate) {
      t.coef += coef;
      return;
    }
  }
  terms_.push_back({coef, power, rate});
}

double ExpPoly::operator()(double t) const {
  double sum = 0.0;
  for (const auto& term : terms_)
    sum += term.coef * std::pow(t, term.power) * std::exp(term.rate * t);
  return sum;
}

ExpPoly& ExpPoly::operator+=(const ExpPoly& other) {
  for (const auto& t : other.terms_) add_term(t.coef, t.power, t.rate);
  return *this;
}

ExpPoly& ExpPoly::operator-=(const ExpPoly& other) {
  for (const auto& t : other.terms_) add_term(-t.coef, t.power, t.rate);
  return *this;
}

ExpPoly& ExpPoly::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& t : terms_) t.coef *= s;
  return *this;
}

ExpPoly operator*(const ExpPoly& a, const ExpPoly& b) {
  ExpPoly out;
  for (const auto& x : a.terms_)
    for (const auto& y : b.terms_)
      out.add_term(x.coef * y.coef, x.power + y.power, x.rate + y.rate);
  return out;
}

double ExpPoly::integrate(double a, double b) const {
  double sum = 0.0;
  for (const auto& t : terms_)
    sum += t.coef * (moment_from_zero(t.power, t.rate, b) -
                     moment_from_zero(t.power, t.rate, a));
  return sum;
}

ExpPoly ExpPoly::antiderivative(double span) const {
  ExpPoly out;
  for (const auto& t : terms_) {
    if (t.rate == 0.0 || std::abs(t.rate) * span <= kSeriesThreshold) {
      double factor = 1.0;
      const int order = (t.rate == 0.0) ? 0 : kSeriesOrder;
      for (int n = 0; n <= order; ++n) {
        const int p = n + t.power + 1;
        out.add_term(t.coef * factor / p, p, 0.0);
        factor *= t.rate / (n + 1);
      }
      continue;
    }
    double falling = 1.0;
    double inv_pow = 1.0 / t.rate;
    for (int j = 0; j <= t.power; ++j) {
      const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
      out.add_term(t.coef * sgn * falling * inv_pow, t.power - j, t.rate);
      falling *= (t.power - j);
      inv_pow /= t.rate;
    }
  }
  return out;
}

ExpPoly ExpPoly::integral_to(double upper, double span) const {
  const ExpPoly anti = antiderivative(span);
  return ExpPoly::constant(anti(upper)) - anti;
}

}  // namespace cvtele
