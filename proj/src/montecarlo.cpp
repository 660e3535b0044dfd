#include "cvtele/montecarlo.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace cvtele {

namespace {

constexpr std::uint64_t kTeleportStream = 1;
constexpr std::uint64_t kVerifyBStream = 2;
constexpr std::uint64_t kVerifyAStream = 3;
constexpr std::size_t kBlock = 4096;

const double kHalf = std::sqrt(0.5);

// Lower Cholesky factor of a 2x2 covariance, tolerating rank deficiency.
struct Cholesky2 {
  double l11 = 0.0, l21 = 0.0, l22 = 0.0;

  Cholesky2(double c00, double c01, double c11) {
    if (c00 > 0.0) {
      l11 = std::sqrt(c00);
      l21 = c01 / l11;
    }
    l22 = std::sqrt(std::max(0.0, c11 - l21 * l21));
  }
};

// Draws one run of the teleportation channel. Every envelope f(g) = base +
// g slope splits each noise field into a pre-feedback part and a part that
// reaches B only through the Bell outcome; the two are correlated through
// the overlap integrals of base and slope.
class TeleportSampler {
 public:
  TeleportSampler(const PhysicalParams& params, double gain)
      : channel_(teleport_channel(params)), gain_(gain) {
    const double light = 0.5;
    const double noise = 0.5 * params.m;
    for (const auto* env : {&channel_.f_NB, &channel_.f_NA, &channel_.f_y, &channel_.f_q}) {
      const double density = env->weight * (env->label == "fbar_NB" || env->label == "fbar_NA"
                                                ? noise
                                                : light);
      fields_.emplace_back(density * env->I00, density * env->I01, density * env->I11);
    }
    if (params.T == 0.0) {
      // Degenerate channel: Bell outcome is the bare light vacuum.
      fields_.clear();
      fields_.emplace_back(0.0, 0.0, 0.5);
    }
  }

  void draw(const rng::CounterRng& rng, std::uint64_t run, QuadraturePair input,
            RunRecord& out) const {
    const auto [bx, bp] = rng.normal_pair(run, 0);
    const auto [ax, ap] = rng.normal_pair(run, 1);
    const QuadraturePair xb{kHalf * bx, kHalf * bp};
    const QuadraturePair xa{input.x + kHalf * ax, input.p + kHalf * ap};

    QuadraturePair pre{channel_.c_B_base * xb.x, channel_.c_B_base * xb.p};
    QuadraturePair bell_xp{channel_.c_B_slope * xb.x + channel_.kappa * xa.x,
                           channel_.c_B_slope * xb.p + channel_.kappa * xa.p};
    std::uint64_t pair = 2;
    for (const auto& f : fields_) {
      const auto [x1, x2] = rng.normal_pair(run, pair++);
      const auto [p1, p2] = rng.normal_pair(run, pair++);
      pre.x += f.l11 * x1;
      bell_xp.x += f.l21 * x1 + f.l22 * x2;
      pre.p += f.l11 * p1;
      bell_xp.p += f.l21 * p1 + f.l22 * p2;
    }
    out.input_mean = input;
    out.input_sample = xa;
    out.pre_feedback = pre;
    out.bell_outcome = {bell_xp.p, bell_xp.x};
    out.teleported = {pre.x + gain_ * bell_xp.x, pre.p + gain_ * bell_xp.p};
  }

  const TeleportChannel& channel() const { return channel_; }

 private:
  TeleportChannel channel_;
  double gain_;
  std::vector<Cholesky2> fields_;
};

// Inverts the mean relation for one shot: x from y_s, p from y_c.
QuadraturePair reconstruct_mean(const ReadoutModel& model, QuadraturePair light) {
  if (!(model.coeffs.kappa > 0.0))
    throw UnrecoverableSignal("verification readout: kappa = 0, no atomic signal");
  const double scale = std::sqrt(model.eta) * model.coeffs.kappa;
  return {light.p / scale, light.x / scale};
}

struct Moments {
  std::size_t n = 0;
  double mean_x = 0.0, m2_x = 0.0, mean_p = 0.0, m2_p = 0.0;

  void add(QuadraturePair v) {
    ++n;
    const double dx = v.x - mean_x;
    mean_x += dx / n;
    m2_x += dx * (v.x - mean_x);
    const double dp = v.p - mean_p;
    mean_p += dp / n;
    m2_p += dp * (v.p - mean_p);
  }

  void merge(const Moments& o) {
    if (o.n == 0) return;
    const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
    const double total = na + nb;
    const double dx = o.mean_x - mean_x, dp = o.mean_p - mean_p;
    mean_x += dx * nb / total;
    mean_p += dp * nb / total;
    m2_x += o.m2_x + dx * dx * na * nb / total;
    m2_p += o.m2_p + dp * dp * na * nb / total;
    n += o.n;
  }

  RunStatistics stats() const {
    RunStatistics s;
    s.n_runs = n;
    s.mean = {mean_x, mean_p};
    if (n >= 2) {
      s.var_x = m2_x / (n - 1);
      s.var_p = m2_p / (n - 1);
      s.stderr_var = s.var_x * std::sqrt(2.0 / (n - 1));
    }
    return s;
  }
};

unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(block_index) for every block; blocks are striped over workers.
template <class Body>
void for_each_block(std::size_t n_blocks, unsigned workers, const Body& body) {
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(1, n_blocks)));
  if (workers <= 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) body(b);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t b = w; b < n_blocks; b += workers) body(b);
    });
}

}  // namespace

ReadoutModel ReadoutModel::for_ensemble_B(const PhysicalParams& params, double readout_T) {
  return {readout_coefficients(params.with_duration(readout_T)), params.m, params.eta_B};
}

ReadoutModel ReadoutModel::for_ensemble_A(const PhysicalParams& params, double readout_T) {
  return {readout_coefficients(params.with_duration(readout_T)), params.m, params.eta_A};
}

QuadraturePair sample_readout(const ReadoutModel& model, QuadraturePair atom_value,
                              const rng::CounterRng& rng, std::uint64_t run) {
  if (!(model.eta > 0.0 && model.eta <= 1.0))
    throw std::invalid_argument("sample_readout: eta must lie in (0, 1]");
  const auto& c = model.coeffs;
  const auto [yc, ys] = rng.normal_pair(run, 0);
  const auto [qc, qs] = rng.normal_pair(run, 1);
  const auto [fc, fs] = rng.normal_pair(run, 2);
  const auto [vc, vs] = rng.normal_pair(run, 3);
  const double noise_f = c.c_N * std::sqrt(0.5 * model.m);
  const double light_c = c.kappa * atom_value.p + kHalf * (c.c_y * yc + c.c_q * qs) + noise_f * fc;
  const double light_s = c.kappa * atom_value.x + kHalf * (c.c_y * ys + c.c_q * qc) + noise_f * fs;
  const double amp = std::sqrt(model.eta);
  const double loss = std::sqrt(0.5 * (1.0 - model.eta));
  return {amp * light_c + loss * vc, amp * light_s + loss * vs};
}

QuadraturePair run_verification(const ReadoutModel& model, QuadraturePair atom_mean,
                                QuadraturePair atom_var, const rng::CounterRng& rng,
                                std::uint64_t run) {
  if (!(atom_var.x >= 0.0) || !(atom_var.p >= 0.0))
    throw std::invalid_argument("run_verification: variances must be non-negative");
  if (!(model.coeffs.kappa > 0.0))
    throw UnrecoverableSignal("run_verification: kappa = 0, no atomic signal");
  const auto [zx, zp] = rng.normal_pair(run, 4);
  const QuadraturePair atom{atom_mean.x + std::sqrt(atom_var.x) * zx,
                            atom_mean.p + std::sqrt(atom_var.p) * zp};
  const auto light = sample_readout(model, atom, rng, run);
  return reconstruct_mean(model, light);
}

QuadraturePair run_verification(const PhysicalParams& params, QuadraturePair atom_mean,
                                QuadraturePair atom_var, std::uint64_t seed, std::uint64_t run,
                                double readout_T) {
  params.validate();
  return run_verification(ReadoutModel::for_ensemble_B(params, readout_T), atom_mean, atom_var,
                          rng::CounterRng(seed, kVerifyBStream), run);
}

AtomMoments verify_ensemble(const ReadoutModel& model, QuadraturePair atom_mean, double atom_var,
                            std::size_t n_runs, std::uint64_t seed) {
  if (n_runs < 2) throw std::invalid_argument("verify_ensemble: need at least 2 runs");
  const rng::CounterRng rng(seed, kVerifyBStream);
  Moments light;
  const double sd = std::sqrt(atom_var);
  for (std::size_t i = 0; i < n_runs; ++i) {
    const auto [zx, zp] = rng.normal_pair(i, 4);
    const QuadraturePair atom{atom_mean.x + sd * zx, atom_mean.p + sd * zp};
    light.add(sample_readout(model, atom, rng, i));
  }
  const auto s = light.stats();
  const LightMoments measured{s.mean.x, s.mean.p, s.var_x, s.var_p};
  return reconstruct_state(measured, model.coeffs, model.m, model.eta);
}

RunStatistics statistics_of(const std::vector<QuadraturePair>& samples) {
  Moments m;
  for (const auto& s : samples) m.add(s);
  return m.stats();
}

TeleportationRun run_teleportation(const PhysicalParams& params, double gain,
                                   QuadraturePair input_mean, std::size_t n_runs,
                                   const McOptions& options) {
  params.validate();
  if (n_runs < 2) throw std::invalid_argument("run_teleportation: n_runs must be >= 2");
  const TeleportSampler sampler(params, gain);
  const ReadoutModel verify = ReadoutModel::for_ensemble_B(params, options.readout_T);
  const bool can_verify = verify.coeffs.kappa > 0.0 && verify.eta > 0.0;
  const rng::CounterRng tele_rng(options.seed, kTeleportStream);
  const rng::CounterRng verify_rng(options.seed, kVerifyBStream);

  TeleportationRun result;
  if (options.keep_records) result.records.resize(n_runs);
  const std::size_t n_blocks = (n_runs + kBlock - 1) / kBlock;
  std::vector<Moments> blocks(n_blocks);

  for_each_block(n_blocks, resolve_workers(options.workers), [&](std::size_t b) {
    const std::size_t begin = b * kBlock;
    const std::size_t end = std::min(n_runs, begin + kBlock);
    RunRecord local;
    for (std::size_t i = begin; i < end; ++i) {
      RunRecord& rec = options.keep_records ? result.records[i] : local;
      sampler.draw(tele_rng, i, input_mean, rec);
      if (can_verify) {
        const auto tele_light = sample_readout(verify, rec.teleported, verify_rng, i);
        const auto pre_light = sample_readout(verify, rec.pre_feedback, verify_rng, i);
        rec.verified = reconstruct_mean(verify, tele_light);
        rec.verified_pre_feedback = reconstruct_mean(verify, pre_light);
      }
      blocks[b].add(rec.teleported);
    }
  });

  Moments total;
  for (const auto& b : blocks) total.merge(b);
  result.stats = total.stats();
  return result;
}

std::vector<QuadraturePair> apply_numerical_feedback(const std::vector<RunRecord>& records,
                                                     double gain) {
  std::vector<QuadraturePair> out;
  out.reserve(records.size());
  for (const auto& r : records)
    out.push_back({r.verified_pre_feedback.x + gain * r.bell_outcome.p,
                   r.verified_pre_feedback.p + gain * r.bell_outcome.x});
  return out;
}

VarianceCurve variance_vs_gain(const PhysicalParams& params, const std::vector<double>& gains,
                               const std::vector<QuadraturePair>& input_means, std::size_t n_runs,
                               const McOptions& options) {
  params.validate();
  std::vector<double> distinct = gains;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3)
    throw std::invalid_argument("variance_vs_gain: need at least 3 distinct gains");
  if (input_means.empty()) throw std::invalid_argument("variance_vs_gain: no input states");
  if (n_runs == 1) throw std::invalid_argument("variance_vs_gain: n_runs must be 0 or >= 2");

  const TeleportChannel channel = teleport_channel(params);
  VarianceCurve curve;
  std::uint64_t point = 0;
  for (double g : gains) {
    const double analytic = channel.variance(g);
    std::vector<RunStatistics> at_gain;
    for (const auto& input : input_means) {
      RunStatistics stats;
      if (n_runs == 0) {
        stats.mean = {g * channel.kappa * input.x, g * channel.kappa * input.p};
        stats.var_x = stats.var_p = analytic;
      } else {
        McOptions o = options;
        o.keep_records = false;
        o.seed = rng::mix64(options.seed ^ rng::mix64(++point));
        stats = run_teleportation(params, g, input, n_runs, o).stats;
      }
      at_gain.push_back(stats);
      curve.points.push_back({g, input, stats, analytic});
    }
    for (std::size_t i = 0; i < at_gain.size(); ++i)
      for (std::size_t j = i + 1; j < at_gain.size(); ++j) {
        const double se = std::hypot(at_gain[i].stderr_var, at_gain[j].stderr_var);
        if (se > 0.0)
          curve.max_input_spread_sigma = std::max(
              curve.max_input_spread_sigma, std::abs(at_gain[i].var_x - at_gain[j].var_x) / se);
      }
  }

  const auto rows = static_cast<Eigen::Index>(2 * curve.points.size());
  Eigen::MatrixXd design(rows, 3);
  Eigen::VectorXd values(rows);
  for (std::size_t k = 0; k < curve.points.size(); ++k) {
    const auto& p = curve.points[k];
    for (int q = 0; q < 2; ++q) {
      const auto r = static_cast<Eigen::Index>(2 * k + q);
      design.row(r) << 1.0, p.gain, p.gain * p.gain;
      values(r) = q == 0 ? p.stats.var_x : p.stats.var_p;
    }
  }
  const Eigen::Vector3d fit = design.colPivHouseholderQr().solve(values);
  curve.c0 = fit(0);
  curve.c1 = fit(1);
  curve.c2 = fit(2);
  curve.max_fit_residual = (design * fit - values).cwiseAbs().maxCoeff();
  return curve;
}

std::vector<QuadraturePair> running_average(const std::vector<QuadraturePair>& points,
                                            std::size_t window) {
  if (window == 0) throw std::invalid_argument("running_average: window must be > 0");
  std::vector<QuadraturePair> out(points.size());
  double sx = 0.0, sp = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    sx += points[i].x;
    sp += points[i].p;
    if (i >= window) {
      sx -= points[i - window].x;
      sp -= points[i - window].p;
    }
    const double n = static_cast<double>(std::min(i + 1, window));
    out[i] = {sx / n, sp / n};
  }
  return out;
}

SequenceTrace run_sequence(const PhysicalParams& params, double gain,
                           const std::vector<QuadraturePair>& waveform, double cycle_rate,
                           const SequenceOptions& options) {
  params.validate();
  if (waveform.empty()) throw std::invalid_argument("run_sequence: empty waveform");
  if (!(cycle_rate > 0.0)) throw std::invalid_argument("run_sequence: cycle_rate must be > 0");

  const TeleportSampler sampler(params, gain);
  const ReadoutModel verify_B = ReadoutModel::for_ensemble_B(params, options.mc.readout_T);
  const ReadoutModel verify_A = ReadoutModel::for_ensemble_A(params, options.mc.readout_T);
  const rng::CounterRng tele_rng(options.mc.seed, kTeleportStream);
  const rng::CounterRng rng_B(options.mc.seed, kVerifyBStream);
  const rng::CounterRng rng_A(options.mc.seed, kVerifyAStream);

  SequenceTrace trace;
  trace.cycle_rate = cycle_rate;
  trace.transfer = gain * sampler.channel().kappa;
  const std::size_t n = waveform.size();
  trace.timestamps.resize(n);
  trace.applied_waveform = waveform;
  trace.verified_input.resize(n);
  trace.verified_teleported.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    trace.timestamps[i] = static_cast<double>(i) / cycle_rate;
    RunRecord rec;
    sampler.draw(tele_rng, i, waveform[i], rec);
    const auto in_light = sample_readout(verify_A, rec.input_sample, rng_A, i);
    const auto out_light = sample_readout(verify_B, rec.teleported, rng_B, i);
    trace.verified_input[i] = reconstruct_mean(verify_A, in_light);
    trace.verified_teleported[i] = reconstruct_mean(verify_B, out_light);
  }
  trace.running_input = running_average(trace.verified_input, options.window);
  trace.running_teleported = running_average(trace.verified_teleported, options.window);
  return trace;
}

std::vector<QuadraturePair> illustrative_waveform(std::size_t n_cycles, double cycle_rate,
                                                  double amplitude) {
  const double two_pi = 6.283185307179586476925286766559;
  std::vector<QuadraturePair> out(n_cycles);
  for (std::size_t i = 0; i < n_cycles; ++i) {
    const double t = static_cast<double>(i) / cycle_rate;
    // Slow amplitude breathing (40 s period) under a 25 s phase rotation.
    const double amp = amplitude * (0.6 + 0.4 * std::sin(two_pi * t / 40.0));
    const double phase = two_pi * t / 25.0;
    out[i] = {amp * std::cos(phase), amp * std::sin(phase)};
  }
  return out;
}

}  // namespace cvtele
