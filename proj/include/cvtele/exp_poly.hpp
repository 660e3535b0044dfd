#pragma once

#include <vector>

namespace cvtele {

/// Finite sum of terms  coef * t^power * exp(rate * t).
///
/// Closed under addition and multiplication, and integrable in closed form,
/// which is all the temporal mode algebra needs. Terms with identical
/// (rate, power) are merged; rates are compared exactly.
class ExpPoly {
 public:
  struct Term {
    double coef;
    int power;
    double rate;
  };

  ExpPoly() = default;
  static ExpPoly constant(double c) { return term(c, 0, 0.0); }
  static ExpPoly exponential(double c, double rate) { return term(c, 0, rate); }
  static ExpPoly term(double coef, int power, double rate);
  /// c0 + c1 t  (handy for factors like (T - t)).
  static ExpPoly linear(double c0, double c1);

  double operator()(double t) const;

  ExpPoly& operator+=(const ExpPoly& other);
  ExpPoly& operator-=(const ExpPoly& other);
  ExpPoly& operator*=(double s);
  friend ExpPoly operator+(ExpPoly a, const ExpPoly& b) { return a += b; }
  friend ExpPoly operator-(ExpPoly a, const ExpPoly& b) { return a -= b; }
  friend ExpPoly operator*(ExpPoly a, double s) { return a *= s; }
  friend ExpPoly operator*(double s, ExpPoly a) { return a *= s; }
  friend ExpPoly operator*(const ExpPoly& a, const ExpPoly& b);
  ExpPoly operator-() const { return *this * -1.0; }

  /// Exact value of the integral over [a, b].
  double integrate(double a, double b) const;

  /// An antiderivative (defined up to a constant). `span` is the length of the
  /// domain the result will be evaluated on; terms with |rate| * span below
  /// 0.1 are expanded into their Taylor polynomial first, which avoids the
  /// 1/rate cancellation of the closed form.
  ExpPoly antiderivative(double span) const;

  /// s -> integral of this over [s, upper], as an ExpPoly in s.
  ExpPoly integral_to(double upper, double span) const;

  const std::vector<Term>& terms() const { return terms_; }

 private:
  void add_term(double coef, int power, double rate);
  std::vector<Term> terms_;
};

}  // namespace cvtele
