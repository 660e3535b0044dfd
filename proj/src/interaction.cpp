#include "cvtele/interaction.hpp"

#include "cvtele/quadrature.hpp"

#include <cmath>

namespace cvtele {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("PhysicalParams: " + what);
}

double checked_sqrt(double v) { return std::sqrt(std::max(0.0, v)); }

}  // namespace

PhysicalParams PhysicalParams::from_total_decay(double gamma, double gamma_extra, double Z,
                                                double T) {
  PhysicalParams p;
  p.gamma_s = gamma - gamma_extra;
  p.gamma_extra = gamma_extra;
  p.Z = Z;
  p.T = T;
  p.validate();
  return p;
}

PhysicalParams PhysicalParams::measured(double T) {
  return from_total_decay(99.3, 26.3, std::sqrt(6.3), T);
}

void PhysicalParams::validate() const {
  require(std::isfinite(gamma_s) && gamma_s > 0.0, "gamma_s must be > 0");
  require(std::isfinite(gamma_extra) && gamma_extra >= 0.0, "gamma_extra must be >= 0");
  require(std::isfinite(Z) && Z > 1.0, "Z must be > 1");
  require(std::isfinite(T) && T >= 0.0, "T must be >= 0");
  require(std::isfinite(m) && m >= 1.0, "m must be >= 1");
  require(eta_A >= 0.0 && eta_A <= 1.0, "eta_A must lie in [0, 1]");
  require(eta_B >= 0.0 && eta_B <= 1.0, "eta_B must lie in [0, 1]");
  require(std::isfinite(omega_larmor), "omega_larmor must be finite");
}

std::vector<std::string> PhysicalParams::warnings() const {
  std::vector<std::string> out;
  if (!rotating_frame_valid())
    out.push_back("omega_larmor * T = " + std::to_string(omega_larmor * T) +
                  " < 100: rotating-frame input-output relations are inaccurate");
  return out;
}

CouplingRatios coupling_ratios(double Z) {
  if (!(Z > 0.0)) throw std::invalid_argument("coupling_ratios: Z must be > 0");
  return {0.5 * (Z + 1.0 / Z), 0.5 * (Z - 1.0 / Z)};
}

double ModeEnvelope::normalization_by_quadrature(double rel_tol) const {
  const auto r = quad::integrate([&](double t) {
    const double f = shape(t);
    return f * f;
  }, 0.0, duration, rel_tol);
  return weight * r.value;
}

ReadoutEnvelopes mode_envelopes(const PhysicalParams& params) {
  params.validate();
  if (!(params.T > 0.0))
    throw std::invalid_argument("mode_envelopes: T must be > 0 (zero-length mode)");
  const double g = params.gamma();
  const double gs = params.gamma_s;
  const double T = params.T;
  const double root_g = std::sqrt(g);
  const double decay = -std::expm1(-2.0 * g * T);  // 1 - e^{-2 gamma T}
  const double inv_root = 1.0 / std::sqrt(decay);
  const double e2 = std::exp(-2.0 * g * T);

  const ExpPoly falling = ExpPoly::exponential(1.0, -g);
  const ExpPoly rising = ExpPoly::exponential(e2, g);  // e^{-2 gamma T} e^{gamma t}
  const ExpPoly bracket = falling - rising;

  const ExpPoly fy =
      inv_root * ((2.0 * root_g - gs / root_g) * falling + (gs / root_g) * rising);
  const ExpPoly fq = params.Z * params.Z * (gs / root_g) * inv_root * bracket;
  const ExpPoly fN =
      params.Z * std::sqrt(gs * params.gamma_extra) / root_g * inv_root * bracket;

  auto make = [&](std::string label, ExpPoly shape, double weight) {
    const double norm = weight * (shape * shape).integrate(0.0, T);
    return ModeEnvelope{std::move(label), std::move(shape), std::max(0.0, norm), weight, T};
  };
  return {make("f_y", fy, 0.5), make("f_q", fq, 0.5), make("f_N", fN, 1.0)};
}

InteractionCoefficients readout_coefficients(const PhysicalParams& params) {
  params.validate();
  if (params.T == 0.0) return {0.0, 1.0, 0.0, 0.0};
  const double g = params.gamma();
  const double kappa = params.Z * std::sqrt(params.gamma_s) / std::sqrt(2.0 * g) *
                       std::sqrt(-std::expm1(-2.0 * g * params.T));
  const auto env = mode_envelopes(params);
  return {kappa, checked_sqrt(env.f_y.normalization), checked_sqrt(env.f_q.normalization),
          checked_sqrt(env.f_N.normalization)};
}

InteractionCoefficients qnd_coefficients(double Z, double gammaT) {
  if (!(gammaT >= 0.0)) throw std::invalid_argument("qnd_coefficients: gammaT must be >= 0");
  if (!(Z >= 0.0)) throw std::invalid_argument("qnd_coefficients: Z must be >= 0");
  const double kappa = Z * std::sqrt(gammaT);
  return {kappa, 1.0, kappa * kappa / std::sqrt(3.0), 0.0};
}

LightMoments readout_moments(const AtomMoments& atom, const InteractionCoefficients& coeffs,
                             double m) {
  if (!(atom.var_x >= 0.0) || !(atom.var_p >= 0.0))
    throw std::invalid_argument("readout_moments: variances must be non-negative");
  const double k2 = coeffs.kappa * coeffs.kappa;
  const double noise = readout_noise_variance(coeffs, m);
  return {coeffs.kappa * atom.mean.p, coeffs.kappa * atom.mean.x, k2 * atom.var_p + noise,
          k2 * atom.var_x + noise};
}

LightMoments apply_detection_efficiency(const LightMoments& light, double eta) {
  if (!(eta > 0.0 && eta <= 1.0))
    throw std::invalid_argument("apply_detection_efficiency: eta must lie in (0, 1]");
  const double amp = std::sqrt(eta);
  const double vac = 0.5 * (1.0 - eta);
  return {amp * light.mean_c, amp * light.mean_s, eta * light.var_c + vac,
          eta * light.var_s + vac};
}

AtomMoments reconstruct_state(const LightMoments& measured, const InteractionCoefficients& coeffs,
                              double m, double eta) {
  if (!(eta > 0.0 && eta <= 1.0))
    throw std::invalid_argument("reconstruct_state: eta must lie in (0, 1]");
  if (!(coeffs.kappa > 0.0))
    throw UnrecoverableSignal("reconstruct_state: kappa = 0, readout carries no atomic signal");
  const double amp = std::sqrt(eta);
  const double vac = 0.5 * (1.0 - eta);
  const double var_c = (measured.var_c - vac) / eta;
  const double var_s = (measured.var_s - vac) / eta;
  const double noise = readout_noise_variance(coeffs, m);
  const double k = coeffs.kappa;
  return {{measured.mean_s / (amp * k), measured.mean_c / (amp * k)},
          (var_s - noise) / (k * k),
          (var_c - noise) / (k * k)};
}

}  // namespace cvtele
