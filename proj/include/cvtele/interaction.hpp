#pragma once

#include "cvtele/exp_poly.hpp"
#include "cvtele/gaussian.hpp"

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cvtele {

/// Raised when a readout carries no atomic signal (kappa == 0).
class UnrecoverableSignal : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Atom-light interaction parameters for one pulse.
///
/// gamma_s is the collective (coupling) part of the transverse decay and
/// gamma_extra the decoherence part; the total rate is always derived.
struct PhysicalParams {
  double gamma_s = 73.0;        // 1/s
  double gamma_extra = 26.3;    // 1/s
  double Z = 2.5099800796022267;  // sqrt(6.3)
  double T = 2e-3;              // s
  double m = 1.3;
  double eta_A = 0.89;
  double eta_B = 0.80;
  double omega_larmor = 2.0 * 3.14159265358979323846 * 322e3;  // rad/s, metadata

  double gamma() const { return gamma_s + gamma_extra; }

  /// Build from the total decay rate, as reported by calibration.
  static PhysicalParams from_total_decay(double gamma, double gamma_extra, double Z, double T);
  /// The measured parameter set, with pulse duration T.
  static PhysicalParams measured(double T = 2e-3);

  PhysicalParams with_duration(double duration) const {
    PhysicalParams p = *this;
    p.T = duration;
    return p;
  }

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  /// Non-fatal findings, e.g. a pulse too short for the rotating-frame model.
  std::vector<std::string> warnings() const;
  bool rotating_frame_valid() const { return omega_larmor * T >= 100.0; }
};

struct CouplingRatios {
  double mu;
  double nu;
};

struct InteractionCoefficients {
  double kappa;
  double c_y;
  double c_q;
  double c_N;
};

/// Slowly varying temporal envelope of an integrated light or noise mode.
struct ModeEnvelope {
  std::string label;
  ExpPoly shape;           // closed form, t in [0, T]
  double normalization;    // weighted integral of shape^2 over [0, T]
  double weight;           // 1/2 for light modes, 1 for noise modes
  double duration;

  double operator()(double t) const { return shape(t); }
  /// The normalization recomputed by adaptive quadrature.
  double normalization_by_quadrature(double rel_tol = 1e-12) const;
};

struct ReadoutEnvelopes {
  ModeEnvelope f_y;
  ModeEnvelope f_q;
  ModeEnvelope f_N;
};

/// First and second moments of the measured cosine/sine readout modes.
struct LightMoments {
  double mean_c;
  double mean_s;
  double var_c;
  double var_s;
};

struct AtomMoments {
  QuadraturePair mean;
  double var_x;
  double var_p;
};

CouplingRatios coupling_ratios(double Z);

ReadoutEnvelopes mode_envelopes(const PhysicalParams& params);

/// kappa from its closed form; c_y, c_q, c_N from the envelope norms.
/// T == 0 yields the no-interaction set (0, 1, 0, 0).
InteractionCoefficients readout_coefficients(const PhysicalParams& params);

/// Lossless large-Z limit: kappa = Z sqrt(gamma T), c_y = 1, c_q = kappa^2/sqrt(3).
InteractionCoefficients qnd_coefficients(double Z, double gammaT);

/// Light moments produced by reading out an atom with the given moments.
/// cos mode carries p, sin mode carries x.
LightMoments readout_moments(const AtomMoments& atom, const InteractionCoefficients& coeffs,
                             double m);

/// Detection as a beamsplitter admixture of vacuum with transmission eta.
LightMoments apply_detection_efficiency(const LightMoments& light, double eta);

/// Inverse of readout_moments followed by apply_detection_efficiency.
AtomMoments reconstruct_state(const LightMoments& measured, const InteractionCoefficients& coeffs,
                              double m, double eta);

/// Added readout noise per output mode, c_y^2/2 + c_q^2/2 + c_N^2 m/2.
inline double readout_noise_variance(const InteractionCoefficients& c, double m) {
  return 0.5 * (c.c_y * c.c_y + c.c_q * c.c_q + c.c_N * c.c_N * m);
}

}  // namespace cvtele
