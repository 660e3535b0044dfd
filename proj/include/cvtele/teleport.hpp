#pragma once

#include "cvtele/interaction.hpp"

#include <functional>
#include <optional>
#include <string>

namespace cvtele {

/// Coefficients of the teleported quadratures of ensemble B,
///   x_B^tele = c_B x_B + c_A x_A + c_NB F_B + c_NA F_A + c_y y + c_q q,
/// for feedback gain `gain`. Positive gain is the feedback sign that
/// transfers the input with a positive amplitude ratio c_A = gain * kappa.
struct TeleportationCoefficients {
  double c_B;
  double c_A;
  double c_NB;
  double c_NA;
  double c_y;
  double c_q;
  double gain;
};

struct TeleportedState {
  QuadraturePair mean;
  double var_x;
  double var_p;
  double transfer;
};

/// Temporal envelope that depends affinely on the gain, f(g) = base + g slope.
/// The overlap integrals are precomputed so that the normalization
///   N(g) = weight * (I00 + 2 g I01 + g^2 I11)
/// is exact in g.
struct AffineEnvelope {
  std::string label;
  ExpPoly base;
  ExpPoly slope;
  double weight = 1.0;
  double duration = 0.0;
  double I00 = 0.0, I01 = 0.0, I11 = 0.0;

  AffineEnvelope() = default;
  AffineEnvelope(std::string label, ExpPoly base, ExpPoly slope, double weight, double duration);

  ExpPoly at(double g) const { return base + g * slope; }
  double normalization(double g) const;
  double normalization_by_quadrature(double g, double rel_tol = 1e-12) const;
};

/// Everything the teleportation channel needs for one parameter set.
struct TeleportChannel {
  PhysicalParams params;
  double c_B_base;    // e^{-gamma T}
  double c_B_slope;
  double kappa;       // c_A = gain * kappa
  AffineEnvelope f_NB, f_NA, f_y, f_q;

  TeleportationCoefficients coefficients(double gain) const;
  /// var(x_B^tele) = var(p_B^tele), a quadratic in the gain.
  double variance(double gain) const;
};

TeleportChannel teleport_channel(const PhysicalParams& params);

TeleportationCoefficients teleport_coefficients(const PhysicalParams& params, double gain);

/// (1/2)(c_B^2 + c_A^2 + m c_NB^2 + m c_NA^2 + c_y^2 + c_q^2)
double teleported_variance(const TeleportationCoefficients& c, double m);

TeleportedState teleported_moments(QuadraturePair input_mean, const PhysicalParams& params,
                                   double gain);

/// Best average fidelity of a measure-and-prepare strategy, (1 + n)/(1 + 2n).
double classical_benchmark(double nbar);

/// Single-shot fidelity in the magnitude form: the output is compared with the
/// input through |<x>| and |<p>|.
double single_shot_fidelity(QuadraturePair input, QuadraturePair output, double var_x,
                            double var_p);

/// Average fidelity over a Gaussian alphabet of width nbar for a symmetric
/// channel with output variance `variance` and amplitude transfer `transfer`.
double average_fidelity(double variance, double transfer, double nbar);
double average_fidelity(const PhysicalParams& params, double gain, double nbar);
double average_fidelity(const TeleportChannel& channel, double gain, double nbar);

/// The same average computed by 2-D adaptive quadrature of the single-shot
/// fidelity against the alphabet density.
double average_fidelity_by_quadrature(double variance, double transfer, double nbar,
                                      double rel_tol = 1e-10);

struct GainOptimum {
  double gain;
  double fidelity;
  bool at_boundary;
};

struct GainSearch {
  double lo = 0.0;
  double hi = 3.0;
  double step = 0.01;
  double tol = 1e-6;
};

/// Maximise a fidelity-vs-gain curve: grid scan, then golden-section.
GainOptimum optimize_gain(const std::function<double(double)>& fidelity_of_gain,
                          const GainSearch& search = {});
GainOptimum optimize_gain(const PhysicalParams& params, double nbar,
                          const GainSearch& search = {});
GainOptimum optimize_gain(const TeleportChannel& channel, double nbar,
                          const GainSearch& search = {});

/// Gain that gives amplitude transfer `ratio` (1/kappa for unity transfer).
double gain_for_transfer(const PhysicalParams& params, double ratio);

/// First nbar in [lo, hi] where `fidelity(nbar) - classical_benchmark(nbar)`
/// changes sign, located by a scan of `samples` points and bisection.
std::optional<double> benchmark_crossing(const std::function<double(double)>& fidelity,
                                         double lo, double hi, int samples = 400);

}  // namespace cvtele
