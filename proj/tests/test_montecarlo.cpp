#include "cvtele/montecarlo.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cstring>

using namespace cvtele;

namespace {

PhysicalParams experiment() {
  return PhysicalParams::from_total_decay(99.3, 26.3, std::sqrt(6.3), 3e-3);
}

bool same_bits(const QuadraturePair& a, const QuadraturePair& b) {
  return std::memcmp(&a, &b, sizeof a) == 0;
}

bool same_records(const std::vector<RunRecord>& a, const std::vector<RunRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a[i];
    const auto& y = b[i];
    if (!same_bits(x.input_sample, y.input_sample) || !same_bits(x.bell_outcome, y.bell_outcome) ||
        !same_bits(x.pre_feedback, y.pre_feedback) || !same_bits(x.teleported, y.teleported) ||
        !same_bits(x.verified, y.verified) ||
        !same_bits(x.verified_pre_feedback, y.verified_pre_feedback))
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("CounterRng: pure function of its counters") {
  const rng::CounterRng a(7, 1), b(7, 1), c(7, 2), d(8, 1);
  CHECK(a.bits(3, 4) == b.bits(3, 4));
  CHECK(a.bits(3, 4) != c.bits(3, 4));
  CHECK(a.bits(3, 4) != d.bits(3, 4));
  CHECK(a.bits(3, 4) != a.bits(4, 3));
  double lo = 1, hi = 0, sum = 0;
  for (std::uint64_t i = 0; i < 100000; ++i) {
    const double u = a.uniform(i, 0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("run_teleportation: deterministic for any worker count") {
  const auto p = experiment();
  McOptions one;
  one.workers = 1;
  McOptions many = one;
  many.workers = 3;
  const auto a = run_teleportation(p, 0.7, {2, -1}, 20000, one);
  const auto b = run_teleportation(p, 0.7, {2, -1}, 20000, one);
  const auto c = run_teleportation(p, 0.7, {2, -1}, 20000, many);
  CHECK(same_records(a.records, b.records));
  CHECK(same_records(a.records, c.records));
  CHECK(std::memcmp(&a.stats, &c.stats, sizeof a.stats) == 0);

  McOptions other = one;
  other.seed = one.seed + 1;
  const auto d = run_teleportation(p, 0.7, {2, -1}, 100, other);
  CHECK(d.records[0].teleported.x != a.records[0].teleported.x);

  // Dropping the records leaves the statistics unchanged.
  McOptions lean = many;
  lean.keep_records = false;
  const auto e = run_teleportation(p, 0.7, {2, -1}, 20000, lean);
  CHECK(e.records.empty());
  CHECK(std::memcmp(&a.stats, &e.stats, sizeof a.stats) == 0);
}

TEST_CASE("run_teleportation: input errors") {
  CHECK_THROWS_AS(run_teleportation(experiment(), 0.5, {0, 0}, 1), std::invalid_argument);
  auto bad = experiment();
  bad.m = 0.5;
  CHECK_THROWS_AS(run_teleportation(bad, 0.5, {0, 0}, 10), std::invalid_argument);
}

TEST_CASE("run_teleportation: sampled variance matches the closed form") {
  Gen gen(31);
  McOptions o;
  o.keep_records = false;
  for (int trial = 0; trial < 10; ++trial) {
    PhysicalParams p;
    p.gamma_s = gen.uniform(20, 200);
    p.gamma_extra = gen.uniform(0, 60);
    p.Z = gen.uniform(1.2, 6);
    p.T = gen.uniform(0.5e-3, 5e-3);
    p.m = gen.uniform(1, 2);
    const double g = gen.uniform(0, 1.5);
    o.seed = 1000 + trial;
    const auto run = run_teleportation(p, g, {gen.uniform(-5, 5), gen.uniform(-5, 5)}, 100000, o);
    const double analytic = teleport_channel(p).variance(g);
    const double se = analytic * std::sqrt(2.0 / (run.stats.n_runs - 1));
    CHECK(std::abs(run.stats.var_x - analytic) < 3 * se);
    CHECK(std::abs(run.stats.var_p - analytic) < 3 * se);
  }
}

TEST_CASE("run_teleportation: unity transfer preserves the mean") {
  const auto p = experiment();
  const double g = gain_for_transfer(p, 1.0);
  McOptions o;
  o.keep_records = false;
  const std::size_t n = 200000;
  const auto run = run_teleportation(p, g, {5, 0}, n, o);
  const double var = teleport_channel(p).variance(g);
  CHECK(std::abs(run.stats.mean.x - 5.0) < 3 * std::sqrt(var / n));
  CHECK(std::abs(run.stats.mean.p) < 3 * std::sqrt(var / n));
}

TEST_CASE("teleported samples are Gaussian") {
  const auto run = run_teleportation(experiment(), 0.6, {1, 1}, 100000);
  std::vector<double> xs;
  for (const auto& r : run.records) xs.push_back(r.teleported.x);
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  double m2 = 0, m4 = 0;
  for (double x : xs) {
    const double d = (x - mean) * (x - mean);
    m2 += d;
    m4 += d * d;
  }
  m2 /= xs.size();
  m4 /= xs.size();
  const double kurtosis = m4 / (m2 * m2);
  CHECK(std::abs(kurtosis - 3.0) < 3 * std::sqrt(24.0 / xs.size()));
}

TEST_CASE("verified means are linear in the input with slope c_A") {
  const auto p = experiment();
  const double g = 0.8;
  const double cA = teleport_coefficients(p, g).c_A;
  std::vector<double> xs, ys;
  McOptions o;
  for (double x : {-10.0, -5.0, 0.0, 5.0, 10.0}) {
    o.seed += 17;
    const auto run = run_teleportation(p, g, {x, 0}, 20000, o);
    double sum = 0;
    for (const auto& r : run.records) sum += r.verified.x;
    xs.push_back(x);
    ys.push_back(sum / run.records.size());
  }
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double slope = sxy / sxx;
  // Per-run verified variance: teleported variance plus inverted readout noise.
  const auto model = ReadoutModel::for_ensemble_B(p, 2e-3);
  const double k2 = model.coeffs.kappa * model.coeffs.kappa;
  const double per_run = teleport_channel(p).variance(g) +
                         (readout_noise_variance(model.coeffs, model.m) + 0.5 * (1 - model.eta) / model.eta) / k2;
  const double se = std::sqrt(per_run / 20000 / sxx);
  CHECK(std::abs(slope - cA) < 3 * se);
}

TEST_CASE("numerical feedback equals the closed-form displacement") {
  const auto p = experiment();
  const double g = 0.9;
  const auto run = run_teleportation(p, g, {3, -4}, 50000);
  const auto numeric = apply_numerical_feedback(run.records, g);
  REQUIRE(numeric.size() == run.records.size());
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    CHECK(std::abs(numeric[i].x - run.records[i].verified.x) < 1e-10);
    CHECK(std::abs(numeric[i].p - run.records[i].verified.p) < 1e-10);
  }
  std::vector<QuadraturePair> verified;
  for (const auto& r : run.records) verified.push_back(r.verified);
  const auto a = statistics_of(numeric), b = statistics_of(verified);
  CHECK(std::abs(a.var_x - b.var_x) < 1e-10);
  CHECK(std::abs(a.mean.x - b.mean.x) < 1e-10);
}

TEST_CASE("run_verification: noiseless stub and unbiasedness") {
  const ReadoutModel ideal{{0.87, 0.0, 0.0, 0.0}, 1.3, 1.0};
  const rng::CounterRng r(5, 2);
  const auto out = run_verification(ideal, {5, -2}, {0, 0}, r, 0);
  CHECK(out.x == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(out.p == doctest::Approx(-2.0).epsilon(1e-15));

  const auto p = experiment();
  const auto model = ReadoutModel::for_ensemble_B(p, 2e-3);
  std::vector<QuadraturePair> shots;
  const rng::CounterRng r2(99, 2);
  for (std::uint64_t i = 0; i < 20000; ++i) shots.push_back(run_verification(model, {5, 0}, {0.5, 0.5}, r2, i));
  const auto s = statistics_of(shots);
  CHECK(std::abs(s.mean.x - 5.0) < 3 * std::sqrt(s.var_x / 20000));
  CHECK(std::abs(s.mean.p) < 3 * std::sqrt(s.var_p / 20000));

  CHECK(same_bits(run_verification(p, {1, 2}, {0.5, 0.5}, 4, 7),
                  run_verification(p, {1, 2}, {0.5, 0.5}, 4, 7)));

  const ReadoutModel dead{{0.0, 1.0, 0.0, 0.0}, 1.3, 1.0};
  CHECK_THROWS_AS(run_verification(dead, {0, 0}, {0.5, 0.5}, r, 0), UnrecoverableSignal);
  CHECK_THROWS_AS(run_verification(model, {0, 0}, {-0.5, 0.5}, r, 0), std::invalid_argument);
}

TEST_CASE("verify_ensemble: vacuum reconstructs to 1/2") {
  const auto model = ReadoutModel::for_ensemble_B(experiment(), 2e-3);
  const auto v = verify_ensemble(model, {0, 0}, 0.5, 100000, 20120701);
  CHECK(v.var_x / 0.5 == doctest::Approx(1.0).epsilon(0.03));
  CHECK(v.var_p / 0.5 == doctest::Approx(1.0).epsilon(0.03));
  CHECK_THROWS_AS(verify_ensemble(model, {0, 0}, 0.5, 1, 1), std::invalid_argument);
}

TEST_CASE("variance_vs_gain: analytic mode is an exact quadratic") {
  const auto curve = variance_vs_gain(experiment(), {0, 0.25, 0.5, 0.75, 1}, {{0, 0}}, 0);
  CHECK(curve.max_fit_residual < 1e-12);
  const auto ch = teleport_channel(experiment());
  for (const auto& pt : curve.points) CHECK(pt.stats.var_x == pt.analytic_var);
  CHECK(std::abs(curve.fitted_argmin() - optimize_gain(ch, 0.0).gain) < 1e-5);
  CHECK_THROWS_AS(variance_vs_gain(experiment(), {0, 1}, {{0, 0}}, 0), std::invalid_argument);
  CHECK_THROWS_AS(variance_vs_gain(experiment(), {0, 1, 1, 0}, {{0, 0}}, 0), std::invalid_argument);
  CHECK_THROWS_AS(variance_vs_gain(experiment(), {0, 1, 2}, {}, 0), std::invalid_argument);
}

TEST_CASE("variance_vs_gain: no dependence on the displacement") {
  const double c = 5 * std::cos(M_PI / 4), s = 5 * std::sin(M_PI / 4);
  McOptions o;
  const auto curve = variance_vs_gain(experiment(), {0.0, 0.4, 0.8, 1.2},
                                      {{0, 0}, {5, 0}, {c, s}, {0, 5}, {25, 0}}, 20000, o);
  CHECK(curve.max_input_spread_sigma < 3.0);
  for (const auto& pt : curve.points) {
    const double se = pt.analytic_var * std::sqrt(2.0 / (pt.stats.n_runs - 1));
    CHECK(std::abs(pt.stats.var_x - pt.analytic_var) < 4 * se);
  }
}

TEST_CASE("variance_vs_gain: fitted minimum near the analytic minimum") {
  const auto p = experiment();
  std::vector<double> gains;
  for (double g = 0.0; g <= 1.2001; g += 0.1) gains.push_back(g);
  const auto curve = variance_vs_gain(p, gains, {{0, 0}}, 100000);
  const double analytic = optimize_gain(teleport_channel(p), 0.0).gain;
  CHECK(std::abs(curve.fitted_argmin() - analytic) < 0.02);
}

TEST_CASE("running_average: trailing window") {
  const std::vector<QuadraturePair> pts{{1, 0}, {2, 2}, {3, 4}, {4, 6}};
  const auto avg = running_average(pts, 2);
  CHECK(avg[0] == QuadraturePair{1, 0});
  CHECK(avg[1] == QuadraturePair{1.5, 1});
  CHECK(avg[3] == QuadraturePair{3.5, 5});
  CHECK_THROWS_AS(running_average(pts, 0), std::invalid_argument);
}

TEST_CASE("run_sequence: trace layout and timing") {
  const auto p = experiment();
  const auto wave = illustrative_waveform(10000, 50.0);
  const auto trace = run_sequence(p, gain_for_transfer(p, 0.8), wave, 50.0);
  REQUIRE(trace.timestamps.size() == 10000);
  CHECK(trace.verified_input.size() == 10000);
  CHECK(trace.verified_teleported.size() == 10000);
  CHECK(trace.running_input.size() == 10000);
  for (std::size_t i = 1; i < trace.timestamps.size(); ++i)
    CHECK(trace.timestamps[i] > trace.timestamps[i - 1]);
  CHECK(trace.timestamps.back() - trace.timestamps.front() == doctest::Approx(200.0).epsilon(0.01));
  CHECK(trace.transfer == doctest::Approx(0.8));

  CHECK_THROWS_AS(run_sequence(p, 1.0, {}, 50.0), std::invalid_argument);
  CHECK_THROWS_AS(run_sequence(p, 1.0, wave, 0.0), std::invalid_argument);
}

TEST_CASE("run_sequence: zero waveform gives zero-mean readout noise") {
  const auto p = experiment();
  const std::size_t n = 20000;
  const double g = 0.8;
  const auto trace = run_sequence(p, g, std::vector<QuadraturePair>(n), 50.0);
  const auto in = statistics_of(trace.verified_input);
  const auto out = statistics_of(trace.verified_teleported);
  const auto A = ReadoutModel::for_ensemble_A(p, 2e-3);
  const auto B = ReadoutModel::for_ensemble_B(p, 2e-3);
  const auto inverted_noise = [](const ReadoutModel& m) {
    return (readout_noise_variance(m.coeffs, m.m) + 0.5 * (1 - m.eta) / m.eta) /
           (m.coeffs.kappa * m.coeffs.kappa);
  };
  const double var_in = 0.5 + inverted_noise(A);
  const double var_out = teleport_channel(p).variance(g) + inverted_noise(B);
  CHECK(std::abs(in.mean.x) < 3 * std::sqrt(var_in / n));
  CHECK(std::abs(out.mean.p) < 3 * std::sqrt(var_out / n));
  CHECK(std::abs(in.var_x - var_in) < 3 * var_in * std::sqrt(2.0 / n));
  CHECK(std::abs(out.var_x - var_out) < 3 * var_out * std::sqrt(2.0 / n));
}
