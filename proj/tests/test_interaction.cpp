#include "cvtele/interaction.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace cvtele;

namespace {

PhysicalParams experiment(double T = 2e-3) {
  PhysicalParams p;
  p.gamma_s = 99.3 - 26.3;
  p.gamma_extra = 26.3;
  p.Z = std::sqrt(6.3);
  p.T = T;
  return p;
}

// Composite Simpson rule; independent of the library's integrators.
template <class F>
double simpson(const F& f, double a, double b, int n = 4000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

// The three readout envelopes written out directly.
struct Envelopes {
  double g, gs, ge, Z, T;
  double pre() const { return 1.0 / std::sqrt(1.0 - std::exp(-2 * g * T)); }
  double y(double t) const {
    return pre() * ((2 * std::sqrt(g) - gs / std::sqrt(g)) * std::exp(-g * t) +
                    gs / std::sqrt(g) * std::exp(-2 * g * T) * std::exp(g * t));
  }
  double bracket(double t) const {
    return std::exp(-g * t) - std::exp(-2 * g * T) * std::exp(g * t);
  }
  double q(double t) const { return Z * Z * gs / std::sqrt(g) * pre() * bracket(t); }
  double n(double t) const { return Z * std::sqrt(gs * ge) / std::sqrt(g) * pre() * bracket(t); }
};

Envelopes envelopes_of(const PhysicalParams& p) {
  return {p.gamma(), p.gamma_s, p.gamma_extra, p.Z, p.T};
}

}  // namespace

TEST_CASE("PhysicalParams: derived gamma and validation") {
  const auto p = PhysicalParams::from_total_decay(99.3, 26.3, std::sqrt(6.3), 2e-3);
  CHECK(p.gamma_s == doctest::Approx(73.0).epsilon(1e-14));
  CHECK(p.gamma() == doctest::Approx(99.3).epsilon(1e-14));
  CHECK(PhysicalParams::measured().gamma() == doctest::Approx(99.3));

  auto bad = experiment();
  bad.Z = 1.0;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("Z"), std::invalid_argument);
  bad = experiment();
  bad.m = 0.9;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("m"), std::invalid_argument);
  bad = experiment();
  bad.gamma_s = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = experiment();
  bad.T = -1e-3;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = experiment();
  bad.eta_B = 1.2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(PhysicalParams::from_total_decay(20.0, 26.3, 2.0, 1e-3), std::invalid_argument);
}

TEST_CASE("PhysicalParams: rotating-frame warning") {
  auto p = experiment();
  CHECK(p.rotating_frame_valid());
  CHECK(p.warnings().empty());
  p.T = 1e-5;  // Omega T ~ 20
  CHECK_FALSE(p.rotating_frame_valid());
  CHECK(p.warnings().size() == 1);
}

TEST_CASE("coupling_ratios: examples and identity") {
  const auto one = coupling_ratios(1.0);
  CHECK(one.mu == 1.0);
  CHECK(one.nu == 0.0);
  const auto two = coupling_ratios(2.0);
  CHECK(two.mu == 1.25);
  CHECK(two.nu == 0.75);
  const auto exp_ratio = coupling_ratios(std::sqrt(6.3));
  CHECK(exp_ratio.mu / exp_ratio.nu == doctest::Approx(7.3 / 5.3).epsilon(1e-13));
  CHECK(exp_ratio.mu / exp_ratio.nu == doctest::Approx(1.377).epsilon(0.005 / 1.377));
  CHECK_THROWS_AS(coupling_ratios(0.0), std::invalid_argument);
  CHECK_THROWS_AS(coupling_ratios(-1.0), std::invalid_argument);

  Gen gen(3);
  for (int i = 0; i < 1000; ++i) {
    const double Z = gen.uniform(1.0 + 1e-9, 100.0);
    const auto r = coupling_ratios(Z);
    CHECK(std::abs(r.mu * r.mu - r.nu * r.nu - 1.0) < 1e-10 * r.mu * r.mu);
    CHECK(r.mu > r.nu);
    CHECK(r.nu > 0.0);
  }
}

TEST_CASE("readout_coefficients: measured setup") {
  const auto c = readout_coefficients(experiment());
  CHECK(c.kappa == doctest::Approx(0.87).epsilon(0.02 / 0.87));
  CHECK(c.c_y == doctest::Approx(0.93).epsilon(0.02 / 0.93));
  CHECK(c.c_q == doctest::Approx(0.50).epsilon(0.02 / 0.50));
  CHECK(c.c_N == doctest::Approx(0.17).epsilon(0.01 / 0.17));

  const auto p = experiment();
  const double kappa_oracle = p.Z * std::sqrt(p.gamma_s) / std::sqrt(2 * p.gamma()) *
                              std::sqrt(1 - std::exp(-2 * p.gamma() * p.T));
  CHECK(rel_diff(c.kappa, kappa_oracle) < 1e-14);
}

TEST_CASE("readout_coefficients: no-interaction limits") {
  auto p = experiment();
  p.T = 0.0;
  const auto zero = readout_coefficients(p);
  CHECK(zero.kappa == 0.0);
  CHECK(zero.c_y == 1.0);
  CHECK(zero.c_q == 0.0);
  CHECK(zero.c_N == 0.0);

  p.T = 1e-9;
  const auto tiny = readout_coefficients(p);
  CHECK(std::abs(tiny.kappa) < 1e-3);
  CHECK(std::abs(tiny.c_y - 1.0) < 1e-3);
  CHECK(std::abs(tiny.c_q) < 1e-3);
  CHECK(std::abs(tiny.c_N) < 1e-3);

  p = experiment();
  p.gamma_extra = 0.0;
  CHECK(readout_coefficients(p).c_N == 0.0);
}

TEST_CASE("mode_envelopes: closed forms") {
  const auto p = experiment();
  const auto env = mode_envelopes(p);
  CHECK(env.f_y.weight == 0.5);
  CHECK(env.f_q.weight == 0.5);
  CHECK(env.f_N.weight == 1.0);
  CHECK(std::sqrt(env.f_q.normalization) == doctest::Approx(0.50).epsilon(0.02 / 0.5));
  // The f_q and f_N brackets vanish at the end of the pulse.
  CHECK(std::abs(env.f_q(p.T)) < 1e-12);
  CHECK(std::abs(env.f_N(p.T)) < 1e-12);

  const auto oracle = envelopes_of(p);
  for (double t : {0.0, 0.3e-3, 1.1e-3, 2e-3}) {
    CHECK(rel_diff(env.f_y(t), oracle.y(t)) < 1e-12);
    CHECK(std::abs(env.f_q(t) - oracle.q(t)) < 1e-12 * std::abs(oracle.q(0)));
    CHECK(std::abs(env.f_N(t) - oracle.n(t)) < 1e-12 * std::abs(oracle.n(0)));
  }

  auto no_extra = p;
  no_extra.gamma_extra = 0.0;
  const auto quiet = mode_envelopes(no_extra);
  CHECK(quiet.f_N.normalization == 0.0);
  CHECK(quiet.f_N(0.5e-3) == 0.0);

  auto zero = p;
  zero.T = 0.0;
  CHECK_THROWS_AS(mode_envelopes(zero), std::invalid_argument);
}

TEST_CASE("mode normalizations: closed form vs quadrature on random parameters") {
  Gen gen(100);
  for (int i = 0; i < 100; ++i) {
    PhysicalParams p;
    p.gamma_s = gen.uniform(5, 300);
    p.gamma_extra = gen.uniform(0, 100);
    p.Z = gen.uniform(1.05, 20);
    p.T = gen.uniform(0.5e-3, 5e-3);
    const auto env = mode_envelopes(p);
    const auto o = envelopes_of(p);
    const double Ny = 0.5 * simpson([&](double t) { return o.y(t) * o.y(t); }, 0, p.T);
    const double Nq = 0.5 * simpson([&](double t) { return o.q(t) * o.q(t); }, 0, p.T);
    const double NN = simpson([&](double t) { return o.n(t) * o.n(t); }, 0, p.T);
    CHECK(rel_diff(env.f_y.normalization, Ny) < 1e-9);
    CHECK(rel_diff(env.f_q.normalization, Nq) < 1e-9);
    if (p.gamma_extra > 0.0) CHECK(rel_diff(env.f_N.normalization, NN) < 1e-9);
    CHECK(rel_diff(env.f_y.normalization, env.f_y.normalization_by_quadrature()) < 1e-9);
    CHECK(rel_diff(env.f_q.normalization, env.f_q.normalization_by_quadrature()) < 1e-9);
  }
}

TEST_CASE("readout_coefficients: c_N / c_q identity") {
  Gen gen(8);
  for (int i = 0; i < 200; ++i) {
    PhysicalParams p;
    p.gamma_s = gen.uniform(5, 300);
    p.gamma_extra = gen.uniform(0.1, 100);
    p.Z = gen.uniform(1.05, 20);
    p.T = gen.uniform(1e-5, 2e-2);
    const auto c = readout_coefficients(p);
    CHECK(rel_diff(c.c_N / c.c_q, std::sqrt(2 * p.gamma_extra / p.gamma_s) / p.Z) < 1e-10);
    CHECK(c.kappa >= 0.0);
    CHECK(c.c_y >= 0.0);
  }
}

TEST_CASE("readout_coefficients: kappa grows with T and saturates") {
  Gen gen(9);
  for (int trial = 0; trial < 20; ++trial) {
    PhysicalParams p;
    p.gamma_s = gen.uniform(5, 300);
    p.gamma_extra = gen.uniform(0, 100);
    p.Z = gen.uniform(1.05, 20);
    const double bound = p.Z * std::sqrt(p.gamma_s / (2 * p.gamma()));
    double previous = 0.0;
    for (double T = 1e-5; T < 0.2; T *= 1.5) {
      p.T = T;
      const double k = readout_coefficients(p).kappa;
      // Strict growth until 1 - e^{-2 gamma T} rounds to 1.
      if (p.gamma() * T < 10) CHECK(k > previous);
      CHECK(k >= previous);
      CHECK(k <= bound * (1 + 1e-15));
      previous = k;
    }
  }
}

TEST_CASE("qnd_coefficients: examples and large-Z limit") {
  const auto a = qnd_coefficients(10.0, 0.01);
  CHECK(a.kappa == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(a.c_y == 1.0);
  CHECK(a.c_q == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK(a.c_N == 0.0);
  const auto b = qnd_coefficients(10.0, 0.04);
  CHECK(b.kappa == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(b.c_q == doctest::Approx(4.0 / std::sqrt(3.0)).epsilon(1e-15));
  const auto z = qnd_coefficients(10.0, 0.0);
  CHECK(z.kappa == 0.0);
  CHECK(z.c_y == 1.0);
  CHECK(z.c_q == 0.0);
  CHECK_THROWS_AS(qnd_coefficients(10.0, -0.1), std::invalid_argument);

  // General coefficients approach the QND set for Z -> infinity at fixed Z^2 gamma_s T.
  PhysicalParams p;
  p.Z = 200.0;
  p.gamma_s = 73.0;
  p.gamma_extra = 0.0;
  p.T = 1.0 / (p.gamma_s * p.Z * p.Z);
  const auto general = readout_coefficients(p);
  const auto limit = qnd_coefficients(p.Z, p.gamma_s * p.T);
  CHECK(rel_diff(general.kappa, limit.kappa) < 0.01);
  CHECK(rel_diff(general.c_y, limit.c_y) < 0.01);
  CHECK(rel_diff(general.c_q, limit.c_q) < 0.01);
}

TEST_CASE("readout_moments: examples") {
  const auto c = readout_coefficients(experiment());
  const auto vac = readout_moments({{0, 0}, 0.5, 0.5}, c, 1.3);
  CHECK(vac.mean_c == 0.0);
  CHECK(vac.mean_s == 0.0);
  const double expected = c.kappa * c.kappa * 0.5 + c.c_y * c.c_y * 0.5 + c.c_q * c.c_q * 0.5 +
                          c.c_N * c.c_N * 0.65;
  CHECK(vac.var_c == doctest::Approx(expected).epsilon(1e-14));
  CHECK(vac.var_s == doctest::Approx(expected).epsilon(1e-14));
  CHECK(vac.var_c == doctest::Approx(0.941).epsilon(0.02));

  const InteractionCoefficients k87{0.87, 0.93, 0.5, 0.17};
  const auto shifted = readout_moments({{5, 0}, 0.5, 0.5}, k87, 1.3);
  CHECK(shifted.mean_s == doctest::Approx(4.35));
  CHECK(shifted.mean_c == 0.0);

  const InteractionCoefficients none{0, 1, 0, 0};
  const auto dark = readout_moments({{3, 4}, 0.5, 0.5}, none, 1.3);
  CHECK(dark.var_c == 0.5);
  CHECK(dark.mean_s == 0.0);
}

TEST_CASE("reconstruct_state inverts readout and detection") {
  const auto c = readout_coefficients(experiment());
  const auto vac = reconstruct_state(readout_moments({{0, 0}, 0.5, 0.5}, c, 1.3), c, 1.3, 1.0);
  CHECK(std::abs(vac.mean.x) == 0.0);
  CHECK(vac.var_x == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(vac.var_p == doctest::Approx(0.5).epsilon(1e-14));

  const auto five = reconstruct_state(readout_moments({{5, 0}, 0.5, 0.5}, c, 1.3), c, 1.3, 1.0);
  CHECK(five.mean.x == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(five.mean.p == 0.0);

  const AtomMoments in{{2.5, -1.0}, 0.7, 0.4};
  const auto lossy = apply_detection_efficiency(readout_moments(in, c, 1.3), 0.89);
  const auto back = reconstruct_state(lossy, c, 1.3, 0.89);
  CHECK(std::abs(back.mean.x - in.mean.x) < 1e-10);
  CHECK(std::abs(back.mean.p - in.mean.p) < 1e-10);
  CHECK(std::abs(back.var_x - in.var_x) < 1e-10);
  CHECK(std::abs(back.var_p - in.var_p) < 1e-10);

  Gen gen(21);
  for (int i = 0; i < 500; ++i) {
    const InteractionCoefficients k{gen.uniform(0.05, 3), gen.uniform(0, 2), gen.uniform(0, 2),
                                    gen.uniform(0, 1)};
    const double m = gen.uniform(1, 2);
    const double eta = gen.uniform(1e-3, 1.0);
    const AtomMoments a{{gen.uniform(-50, 50), gen.uniform(-50, 50)}, gen.uniform(0.01, 10),
                        gen.uniform(0.01, 10)};
    const auto r = reconstruct_state(apply_detection_efficiency(readout_moments(a, k, m), eta), k,
                                     m, eta);
    CHECK(std::abs(r.mean.x - a.mean.x) < 1e-10 * (1 + std::abs(a.mean.x)));
    CHECK(std::abs(r.mean.p - a.mean.p) < 1e-10 * (1 + std::abs(a.mean.p)));
    CHECK(std::abs(r.var_x - a.var_x) < 1e-10 * (1 + a.var_x) / (eta * k.kappa * k.kappa));
    CHECK(std::abs(r.var_p - a.var_p) < 1e-10 * (1 + a.var_p) / (eta * k.kappa * k.kappa));
  }
}

TEST_CASE("reconstruct_state: error paths") {
  const InteractionCoefficients none{0, 1, 0, 0};
  const LightMoments light{0, 0, 0.5, 0.5};
  CHECK_THROWS_AS(reconstruct_state(light, none, 1.3, 1.0), UnrecoverableSignal);
  const auto c = readout_coefficients(experiment());
  CHECK_THROWS_AS(reconstruct_state(light, c, 1.3, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(apply_detection_efficiency(light, 1.5), std::invalid_argument);
}
