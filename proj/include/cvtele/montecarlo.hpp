#pragma once

#include "cvtele/interaction.hpp"
#include "cvtele/rng.hpp"
#include "cvtele/teleport.hpp"

#include <cstdint>
#include <vector>

namespace cvtele {

struct RunRecord {
  QuadraturePair input_mean;
  QuadraturePair input_sample;   // the prepared x_A, p_A of this run
  QuadraturePair bell_outcome;   // (y_c, y_s); y_s carries x, y_c carries p
  QuadraturePair pre_feedback;   // ensemble B before the conditional displacement
  QuadraturePair teleported;     // pre_feedback + gain * (y_s, y_c)
  QuadraturePair verified;       // verification readout of `teleported`
  QuadraturePair verified_pre_feedback;  // same readout noise, applied to pre_feedback
};

struct RunStatistics {
  std::size_t n_runs = 0;
  QuadraturePair mean;
  double var_x = 0.0;
  double var_p = 0.0;
  double stderr_var = 0.0;  // var_x * sqrt(2 / (n - 1)), Gaussian sampling error
};

struct McOptions {
  std::uint64_t seed = 20120701;
  unsigned workers = 0;        // 0: hardware concurrency
  double readout_T = 2e-3;     // verification pulse duration, s
  bool keep_records = true;
};

/// Verification readout: light coefficients, noise multiplier and efficiency.
struct ReadoutModel {
  InteractionCoefficients coeffs;
  double m;
  double eta;

  static ReadoutModel for_ensemble_B(const PhysicalParams& params, double readout_T);
  static ReadoutModel for_ensemble_A(const PhysicalParams& params, double readout_T);
};

struct TeleportationRun {
  std::vector<RunRecord> records;
  RunStatistics stats;
};

TeleportationRun run_teleportation(const PhysicalParams& params, double gain,
                                   QuadraturePair input_mean, std::size_t n_runs,
                                   const McOptions& options = {});

/// Single-shot readout of an atom drawn from (atom_mean, atom_var), returning
/// the mean-inverted quadratures.
QuadraturePair run_verification(const PhysicalParams& params, QuadraturePair atom_mean,
                                QuadraturePair atom_var, std::uint64_t seed,
                                std::uint64_t run = 0, double readout_T = 2e-3);
QuadraturePair run_verification(const ReadoutModel& model, QuadraturePair atom_mean,
                                QuadraturePair atom_var, const rng::CounterRng& rng,
                                std::uint64_t run);

/// Raw measured light (y_c, y_s) of a readout of a known atomic value.
QuadraturePair sample_readout(const ReadoutModel& model, QuadraturePair atom_value,
                              const rng::CounterRng& rng, std::uint64_t run);

/// Verification of a CSS ensemble from many readouts: the measured light
/// moments pushed through reconstruct_state.
AtomMoments verify_ensemble(const ReadoutModel& model, QuadraturePair atom_mean,
                            double atom_var, std::size_t n_runs, std::uint64_t seed);

/// The alternative feedback path: verify B first, then displace the readout
/// result numerically by gain * Bell outcome.
std::vector<QuadraturePair> apply_numerical_feedback(const std::vector<RunRecord>& records,
                                                     double gain);

RunStatistics statistics_of(const std::vector<QuadraturePair>& samples);

struct VariancePoint {
  double gain;
  QuadraturePair input_mean;
  RunStatistics stats;
  double analytic_var;
};

struct VarianceCurve {
  std::vector<VariancePoint> points;
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;  // var ~ c0 + c1 g + c2 g^2
  double max_fit_residual = 0.0;
  /// Largest spread across input states at one gain, in units of the
  /// combined standard error (0 in analytic mode).
  double max_input_spread_sigma = 0.0;

  double fitted_argmin() const { return -c1 / (2.0 * c2); }
};

/// n_runs == 0 selects the analytic variances.
VarianceCurve variance_vs_gain(const PhysicalParams& params, const std::vector<double>& gains,
                               const std::vector<QuadraturePair>& input_means,
                               std::size_t n_runs, const McOptions& options = {});

struct SequenceTrace {
  std::vector<double> timestamps;
  std::vector<QuadraturePair> applied_waveform;
  std::vector<QuadraturePair> verified_input;
  std::vector<QuadraturePair> verified_teleported;
  std::vector<QuadraturePair> running_input;
  std::vector<QuadraturePair> running_teleported;
  double cycle_rate = 0.0;
  double transfer = 0.0;
};

struct SequenceOptions {
  McOptions mc;
  std::size_t window = 25;  // trailing running-average length, cycles
};

/// Stroboscopic teleportation: every cycle resets both ensembles, prepares A
/// at the waveform point, teleports, and reads out input and output.
SequenceTrace run_sequence(const PhysicalParams& params, double gain,
                           const std::vector<QuadraturePair>& waveform, double cycle_rate,
                           const SequenceOptions& options = {});

/// Illustrative amplitude- and phase-modulated input trajectory.
std::vector<QuadraturePair> illustrative_waveform(std::size_t n_cycles, double cycle_rate,
                                                  double amplitude = 8.0);

std::vector<QuadraturePair> running_average(const std::vector<QuadraturePair>& points,
                                            std::size_t window);

}  // namespace cvtele
