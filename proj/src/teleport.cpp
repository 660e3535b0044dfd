#include "cvtele/teleport.hpp"

#include "cvtele/optimize.hpp"
#include "cvtele/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace cvtele {

namespace {

double nonneg_sqrt(double v) { return std::sqrt(std::max(0.0, v)); }

void require_nbar(double nbar, const char* where) {
  if (!(nbar >= 0.0) || !std::isfinite(nbar))
    throw std::invalid_argument(std::string(where) + ": nbar must be >= 0");
}

}  // namespace

AffineEnvelope::AffineEnvelope(std::string label_, ExpPoly base_, ExpPoly slope_, double weight_,
                               double duration_)
    : label(std::move(label_)),
      base(std::move(base_)),
      slope(std::move(slope_)),
      weight(weight_),
      duration(duration_) {
  I00 = (base * base).integrate(0.0, duration);
  I01 = (base * slope).integrate(0.0, duration);
  I11 = (slope * slope).integrate(0.0, duration);
}

double AffineEnvelope::normalization(double g) const {
  return std::max(0.0, weight * (I00 + 2.0 * g * I01 + g * g * I11));
}

double AffineEnvelope::normalization_by_quadrature(double g, double rel_tol) const {
  const ExpPoly f = at(g);
  const auto r = quad::integrate([&](double t) {
    const double v = f(t);
    return v * v;
  }, 0.0, duration, rel_tol);
  return weight * r.value;
}

TeleportChannel teleport_channel(const PhysicalParams& params) {
  params.validate();
  const double g = params.gamma();
  const double gs = params.gamma_s;
  const double ge = params.gamma_extra;
  const double Z = params.Z;
  const double T = params.T;
  const double e1 = std::exp(-g * T);
  const double e2 = std::exp(-2.0 * g * T);
  const double decay = -std::expm1(-2.0 * g * T);
  const double root_decay = std::sqrt(decay);
  const double scale = Z * std::sqrt(gs) / std::sqrt(2.0 * g);

  TeleportChannel ch;
  ch.params = params;
  ch.c_B_base = e1;
  ch.kappa = scale * root_decay;
  if (T == 0.0) {
    // No interaction: B is untouched and the Bell outcome is pure light noise.
    ch.c_B_slope = 0.0;
    return ch;
  }
  // The slopes carry the opposite sign of the textbook feedback gain so that
  // positive gains transfer the input without a phase-space inversion.
  ch.c_B_slope = -scale * (root_decay * (1.0 - gs / g) + 2.0 * gs * T * e2 / root_decay);

  const ExpPoly falling = ExpPoly::exponential(1.0, -g);
  const ExpPoly rising = ExpPoly::exponential(1.0, g);
  const ExpPoly late = e1 * rising;                              // e^{-gamma (T - t)}
  const ExpPoly time_left = ExpPoly::linear(T, -1.0);            // T - t
  const ExpPoly bracket = falling - e2 * rising;                 // e^{-gt} - e^{-2gT} e^{gt}
  const ExpPoly back_action =                                    // B(t)
      (2.0 - gs / g) * falling -
      e2 * rising * (ExpPoly::constant(2.0 - gs / g) - 2.0 * gs * time_left);
  const double alpha = ge / (2.0 * g * g);
  const ExpPoly inner =                                          // J(t)
      alpha * falling - e2 * rising * (ExpPoly::constant(alpha) - (gs / g) * time_left);

  const double root_2ge = std::sqrt(2.0 * ge);
  ch.f_NB = AffineEnvelope("fbar_NB", root_2ge * late,
                           -(root_2ge * Z * std::sqrt(2.0 * gs * g) / root_decay) * inner, 1.0, T);
  ch.f_NA = AffineEnvelope("fbar_NA", ExpPoly{},
                           -(Z * std::sqrt(gs * ge) / std::sqrt(g) / root_decay) * bracket, 1.0, T);
  ch.f_y = AffineEnvelope("fbar_y", -(std::sqrt(2.0 * gs) / Z) * late,
                          -((gs / std::sqrt(g)) / root_decay) *
                              ((2.0 * g / gs) * falling - back_action),
                          0.5, T);
  ch.f_q = AffineEnvelope("fbar_q", (std::sqrt(2.0 * gs) * Z) * late,
                          -(std::sqrt(2.0 * gs) * Z * scale / root_decay) * back_action, 0.5, T);
  return ch;
}

TeleportationCoefficients TeleportChannel::coefficients(double gain) const {
  if (params.T == 0.0) return {c_B_base, 0.0, 0.0, 0.0, std::abs(gain), 0.0, gain};
  return {c_B_base + gain * c_B_slope,
          gain * kappa,
          nonneg_sqrt(f_NB.normalization(gain)),
          nonneg_sqrt(f_NA.normalization(gain)),
          nonneg_sqrt(f_y.normalization(gain)),
          nonneg_sqrt(f_q.normalization(gain)),
          gain};
}

double TeleportChannel::variance(double gain) const {
  return teleported_variance(coefficients(gain), params.m);
}

TeleportationCoefficients teleport_coefficients(const PhysicalParams& params, double gain) {
  return teleport_channel(params).coefficients(gain);
}

double teleported_variance(const TeleportationCoefficients& c, double m) {
  return 0.5 * (c.c_B * c.c_B + c.c_A * c.c_A + m * c.c_NB * c.c_NB + m * c.c_NA * c.c_NA +
                c.c_y * c.c_y + c.c_q * c.c_q);
}

TeleportedState teleported_moments(QuadraturePair input_mean, const PhysicalParams& params,
                                   double gain) {
  const auto c = teleport_coefficients(params, gain);
  const double var = teleported_variance(c, params.m);
  return {{c.c_A * input_mean.x, c.c_A * input_mean.p}, var, var, c.c_A};
}

double classical_benchmark(double nbar) {
  require_nbar(nbar, "classical_benchmark");
  return (1.0 + nbar) / (1.0 + 2.0 * nbar);
}

double single_shot_fidelity(QuadraturePair input, QuadraturePair output, double var_x,
                            double var_p) {
  return coherent_overlap_fidelity({std::abs(input.x), std::abs(input.p)},
                                   {std::abs(output.x), std::abs(output.p)}, var_x, var_p);
}

double average_fidelity(double variance, double transfer, double nbar) {
  require_nbar(nbar, "average_fidelity");
  if (!(variance > 0.0)) throw std::invalid_argument("average_fidelity: variance must be > 0");
  const double mismatch = 1.0 - std::abs(transfer);
  const double denom = 1.0 + 2.0 * variance + 2.0 * nbar * mismatch * mismatch;
  // Product of the identical x and p factors sqrt(2/denom).
  return 2.0 / denom;
}

double average_fidelity(const TeleportChannel& channel, double gain, double nbar) {
  return average_fidelity(channel.variance(gain), gain * channel.kappa, nbar);
}

double average_fidelity(const PhysicalParams& params, double gain, double nbar) {
  return average_fidelity(teleport_channel(params), gain, nbar);
}

double average_fidelity_by_quadrature(double variance, double transfer, double nbar,
                                      double rel_tol) {
  require_nbar(nbar, "average_fidelity_by_quadrature");
  if (nbar == 0.0) return single_shot_fidelity({0, 0}, {0, 0}, variance, variance);
  const double pi = 3.14159265358979323846;
  const double reach = 10.0 * std::sqrt(nbar);
  auto integrand = [&](double x, double p) {
    const double weight = std::exp(-(x * x + p * p) / (2.0 * nbar)) / (2.0 * pi * nbar);
    return weight *
           single_shot_fidelity({x, p}, {transfer * x, transfer * p}, variance, variance);
  };
  return quad::integrate_2d(integrand, -reach, reach, -reach, reach, rel_tol, 1e-14).value;
}

GainOptimum optimize_gain(const std::function<double(double)>& fidelity_of_gain,
                          const GainSearch& search) {
  const auto best =
      opt::grid_then_golden_max(fidelity_of_gain, search.lo, search.hi, search.step, search.tol);
  const bool boundary = best.arg - search.lo < 2.0 * search.tol ||
                        search.hi - best.arg < 2.0 * search.tol;
  return {best.arg, best.value, boundary};
}

GainOptimum optimize_gain(const TeleportChannel& channel, double nbar, const GainSearch& search) {
  require_nbar(nbar, "optimize_gain");
  return optimize_gain([&](double g) { return average_fidelity(channel, g, nbar); }, search);
}

GainOptimum optimize_gain(const PhysicalParams& params, double nbar, const GainSearch& search) {
  return optimize_gain(teleport_channel(params), nbar, search);
}

double gain_for_transfer(const PhysicalParams& params, double ratio) {
  const double kappa = teleport_channel(params).kappa;
  if (!(kappa > 0.0)) throw UnrecoverableSignal("gain_for_transfer: kappa = 0");
  return ratio / kappa;
}

std::optional<double> benchmark_crossing(const std::function<double(double)>& fidelity,
                                         double lo, double hi, int samples) {
  auto excess = [&](double n) { return fidelity(n) - classical_benchmark(n); };
  double prev_n = lo;
  double prev = excess(lo);
  for (int i = 1; i <= samples; ++i) {
    const double n = lo + (hi - lo) * i / samples;
    const double cur = excess(n);
    if ((prev < 0.0) != (cur < 0.0)) {
      double a = prev_n, b = n, fa = prev;
      for (int it = 0; it < 80 && b - a > 1e-10 * (1.0 + b); ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = excess(mid);
        if ((fm < 0.0) == (fa < 0.0)) {
          a = mid;
          fa = fm;
        } else {
          b = mid;
        }
      }
      return 0.5 * (a + b);
    }
    prev_n = n;
    prev = cur;
  }
  return std::nullopt;
}

}  // namespace cvtele
