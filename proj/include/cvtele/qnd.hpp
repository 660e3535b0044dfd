#pragma once

#include "cvtele/interaction.hpp"
#include "cvtele/teleport.hpp"

#include <stdexcept>

namespace cvtele {

class UnsupportedRegime : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Exponential drive envelopes k_B(t) ~ e^{exponent_B t/T} during the
/// B-interaction and k_A(t) ~ e^{exponent_A t/T} during the A-interaction.
/// Exponents are dimensionless (rate times pulse duration).
struct PulseShape {
  double exponent_B = 0.0;
  double exponent_A = 0.0;
};

/// Second moments of the lossless QND teleportation channel, in the form
///   x_B^tele = -(X - g Y),   X = x_B(T),   Y = Bell outcome,
/// where every input mode has variance 1/2. Then
///   var(g) = (xx - 2 g xy + g^2 yy) / 2,   transfer(g) = g * signal.
struct QndGram {
  double xx;
  double xy;
  double yy;
  double signal;  // coefficient of x_A in Y

  double variance(double gain) const { return 0.5 * (xx - 2.0 * gain * xy + gain * gain * yy); }
  double transfer(double gain) const { return gain * signal; }
};

/// Closed-form channel for coupling kappa = Z sqrt(gamma_s T) per ensemble.
/// The measured light mode is matched to the A drive envelope.
QndGram qnd_channel(double kappa, const PulseShape& shape);

/// Independent oracle: Heisenberg-picture evolution of the same channel
/// through `steps` time slices of QND kicks.
QndGram qnd_channel_sliced(double kappa, const PulseShape& shape, int steps = 10000);

/// Unshaped-pulse variance assembled from the readout coefficients:
///   ((1 - g k)^2 + (g k)^2 + g^2 c_y^2 + (k - g k^2)^2 + g^2 c_q^2) / 2.
double qnd_flat_variance(const InteractionCoefficients& qnd, double gain);
double qnd_flat_average_fidelity(double Z, double gamma_sT, double gain, double nbar);

double qnd_average_fidelity(const QndGram& channel, double gain, double nbar);

struct QndOptimum {
  PulseShape shape;
  double gain;
  double fidelity;
  double flat_gain;
  double flat_fidelity;
};

struct QndSearch {
  double exponent_bound = 10.0;
  int max_evaluations = 600;
};

/// Maximise the average fidelity over (exponent_B, exponent_A, gain).
QndOptimum optimize_qnd_pulses(double Z, double gamma_sT, double nbar, const QndSearch& search = {});
/// Same, from a parameter set; only the lossless regime is supported.
QndOptimum optimize_qnd_pulses(const PhysicalParams& params, double nbar,
                               const QndSearch& search = {});

}  // namespace cvtele
