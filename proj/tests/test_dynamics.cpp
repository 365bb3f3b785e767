#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "hybridsim/dynamics.hpp"
#include "test_support.hpp"

using namespace hybridsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(lo + (hi - lo) * i / (n - 1));
  return g;
}

}  // namespace

TEST_CASE("rabi frequency convention") {
  const auto p = default_params();
  CHECK(rabi_frequency(0.0, p) == 0.0);
  CHECK_THAT(rabi_frequency(0.894, p), WithinAbs(1.7716, 2e-4));
  const double b = 1.37;
  CHECK_THAT(rabi_frequency(2.0 * b, p), WithinRel(2.0 * rabi_frequency(b, p), 1e-15));
  CHECK_THROWS_AS(rabi_frequency(-1.0, p), std::domain_error);
}

TEST_CASE("rabi trace: resonant pulses and detuned contrast") {
  DecoherenceParams none;
  const auto pi_pulse = rabi_trace(1.0, 0.0, {0.5}, none);
  CHECK_THAT(pi_pulse[0], WithinAbs(0.0, 1e-12));
  const auto two_pi = rabi_trace(1.0, 0.0, {1.0}, none);
  CHECK_THAT(two_pi[0], WithinAbs(1.0, 1e-12));

  // detuned: oscillation at sqrt(2) MHz with halved contrast, against the
  // direct integration of the same two-level generator
  const auto t = grid(0.0, 3.0, 61);
  const auto trace = rabi_trace(1.0, 1.0, t, none);
  double min_p = 1.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto ref = testsup::integrate_three_level(1.0, 0.0, 1.0, 1e6, t[i], 1e-12);
    REQUIRE_THAT(trace[i], WithinAbs(ref.p_g, 1e-7));
    min_p = std::min(min_p, trace[i]);
  }
  CHECK_THAT(min_p, WithinAbs(0.5, 1e-6));  // halved contrast
  const double period = 1.0 / std::sqrt(2.0);
  CHECK_THAT(rabi_trace(1.0, 1.0, {period}, none)[0], WithinAbs(1.0, 1e-12));
}

TEST_CASE("rabi trace extrema sit at half-integer multiples of 1/Omega") {
  DecoherenceParams none;
  const double omega = 2.31;
  for (int k = 0; k <= 8; ++k) {
    const double t = 0.5 * k / omega;
    const double p = rabi_trace(omega, 0.0, {t}, none)[0];
    CHECK_THAT(p, WithinAbs(k % 2 == 0 ? 1.0 : 0.0, 1e-10));
  }
}

TEST_CASE("pulse rotations match the matrix-exponential oracle") {
  testsup::Rng rng(31);
  for (int i = 0; i < 50; ++i) {
    const double omega = rng.uniform(0.1, 10.0);
    const double delta = rng.uniform(-5.0, 5.0);
    const double t = rng.uniform(0.0, 2.0);
    const PulseAxis axis = rng.uniform() < 0.5 ? PulseAxis::kX : PulseAxis::kY;

    Eigen::Matrix2cd h = Eigen::Matrix2cd::Zero();
    h(0, 0) = delta / 2.0;
    h(1, 1) = -delta / 2.0;
    if (axis == PulseAxis::kX) {
      h(0, 1) = h(1, 0) = omega / 2.0;
    } else {
      h(0, 1) = std::complex<double>(0.0, -omega / 2.0);
      h(1, 0) = std::complex<double>(0.0, omega / 2.0);
    }
    const Eigen::Matrix2cd u_ref = testsup::matrix_exponential_2x2(h, t);

    PulseSequence seq;
    seq.elements = {Pulse{axis, omega, t}};
    const double p = evolve_sequence(seq, delta, DecoherenceParams::none());
    const Eigen::Vector2cd psi = u_ref * Eigen::Vector2cd(1.0, 0.0);
    REQUIRE_THAT(p, WithinAbs(std::norm(psi(1)), 1e-12));
  }
}

TEST_CASE("sequence composition: pi pulse, identity products") {
  PulseSequence pi_seq;
  pi_seq.elements = {Pulse{PulseAxis::kX, 2.0, 1.0 / 4.0}};  // pi at Omega = 2
  CHECK_THAT(evolve_sequence(pi_seq, 0.0, DecoherenceParams::none()),
             WithinAbs(1.0, 1e-12));

  // random pulse train followed by its inverse returns to the start
  testsup::Rng rng(77);
  for (int rep = 0; rep < 25; ++rep) {
    const double omega = rng.uniform(0.5, 5.0);
    PulseSequence seq;
    std::vector<Pulse> fwd;
    const int n = 1 + static_cast<int>(rng.uniform(0.0, 5.0));
    for (int i = 0; i < n; ++i) {
      const PulseAxis axis = rng.uniform() < 0.5 ? PulseAxis::kX : PulseAxis::kY;
      const double tau = rng.uniform(0.01, 1.0 / omega);
      fwd.push_back(Pulse{axis, omega, tau});
      seq.elements.emplace_back(fwd.back());
    }
    for (int i = n - 1; i >= 0; --i) {
      const double phase = std::fmod(omega * fwd[i].duration, 1.0);
      const double tau_inv = (1.0 - phase) / omega;
      seq.elements.emplace_back(Pulse{fwd[i].axis, omega, tau_inv});
    }
    const double p = evolve_sequence(seq, 0.0, DecoherenceParams::none());
    REQUIRE_THAT(p, WithinAbs(0.0, 1e-10));
  }
}

TEST_CASE("hahn and cpmg echoes decay with the stretched-exponential envelope") {
  const double omega = 8.0;

  DecoherenceParams hahn_dec;
  hahn_dec.t2 = 1.54;
  hahn_dec.stretch_exponent = 1.0;
  const double a_hahn = echo_amplitude(make_hahn(1.54, omega), 0.0, hahn_dec);
  CHECK_THAT(a_hahn, WithinAbs(std::exp(-1.0), 1e-9));

  DecoherenceParams cpmg_dec;
  cpmg_dec.t2 = 2.78;
  cpmg_dec.stretch_exponent = 2.0;
  const double a_cpmg = echo_amplitude(make_cpmg(3, 2.78, omega), 0.0, cpmg_dec);
  CHECK_THAT(a_cpmg, WithinAbs(std::exp(-1.0), 1e-9));

  // the envelope applies to the total free time regardless of how it is
  // split across delays
  for (double t : {0.4, 1.1, 2.9}) {
    const double a1 = echo_amplitude(make_hahn(t, omega), 0.0, cpmg_dec);
    const double a3 = echo_amplitude(make_cpmg(3, t, omega), 0.0, cpmg_dec);
    const double expected = std::exp(-std::pow(t / 2.78, 2.0));
    CHECK_THAT(a1, WithinAbs(expected, 1e-9));
    CHECK_THAT(a3, WithinAbs(expected, 1e-9));
  }
}

TEST_CASE("closed-form envelope traces") {
  DecoherenceParams dec;
  dec.t2 = 1.54;
  dec.stretch_exponent = 1.0;
  const auto t = grid(0.0, 5.0, 21);
  const auto h = hahn_trace(t, dec);
  CHECK_THAT(h[0], WithinAbs(1.0, 1e-15));
  const auto c = cpmg_trace(1, t, dec);
  CHECK(h == c);

  DecoherenceParams dec2;
  dec2.t2 = 2.0;
  dec2.stretch_exponent = 2.0;
  CHECK_THAT(hahn_trace({2.0}, dec2)[0], WithinRel(std::exp(-1.0), 1e-12));
  CHECK_THAT(hahn_trace({1.54}, dec)[0], WithinRel(std::exp(-1.0), 1e-12));
}

TEST_CASE("envelope fitting round-trips the generator parameters") {
  const auto t = grid(0.05, 6.0, 60);

  DecoherenceParams g1;
  g1.t2 = 1.54;
  g1.stretch_exponent = 1.0;
  const auto fit1 = fit_envelope(t, hahn_trace(t, g1));
  CHECK_THAT(fit1.t2, WithinRel(1.54, 1e-3));
  CHECK_THAT(fit1.alpha, WithinRel(1.0, 1e-3));

  DecoherenceParams g2;
  g2.t2 = 2.78;
  g2.stretch_exponent = 2.0;
  const auto fit2 = fit_envelope(t, hahn_trace(t, g2));
  CHECK_THAT(fit2.t2, WithinRel(2.78, 1e-3));
  CHECK_THAT(fit2.alpha, WithinRel(2.0, 1e-3));

  const std::vector<double> flat(t.size(), 1.0);
  CHECK_THROWS_AS(fit_envelope(t, flat), FitError);
  CHECK_THROWS_AS(fit_envelope({1.0, 2.0}, {0.5, 0.4}), std::invalid_argument);
}

TEST_CASE("rabi frequency fitting") {
  DecoherenceParams dec;
  dec.rabi_decay_time = 3.0;
  const auto t = grid(0.0, 2.0, 300);
  const auto y = rabi_trace(3.7, 0.0, t, dec);
  const auto fit = fit_rabi_frequency(t, y);
  CHECK_THAT(fit.omega, WithinRel(3.7, 1e-6));

  const std::vector<double> flat(t.size(), 1.0);
  CHECK(fit_rabi_frequency(t, flat).omega == 0.0);

  // less than one full oscillation
  const auto slow = rabi_trace(0.2, 0.0, grid(0.0, 1.0, 50), DecoherenceParams::none());
  CHECK_THROWS_AS(fit_rabi_frequency(grid(0.0, 1.0, 50), slow), std::runtime_error);
}

TEST_CASE("power scaling regression") {
  auto omega_of_power = [](double p) { return 4.2 * std::sqrt(p); };
  const auto s = power_scaling_check({1e-3, 4e-3, 9e-3, 16e-3}, omega_of_power);
  CHECK_THAT(s.slope, WithinRel(4.2, 1e-12));
  CHECK(s.r_squared > 0.999999);
  CHECK(std::abs(s.intercept) < 1e-12);

  // quadrupling the power doubles the Rabi frequency
  CHECK_THAT(omega_of_power(4.0e-3), WithinRel(2.0 * omega_of_power(1.0e-3), 1e-12));

  CHECK_THROWS_AS(power_scaling_check({1.0}, omega_of_power), std::invalid_argument);
  CHECK_THROWS_AS(power_scaling_check({1.0, 1.0, 1.0}, omega_of_power),
                  std::invalid_argument);
}

TEST_CASE("two-level engine vs restricted three-level integrator") {
  testsup::Rng rng(2025);
  for (int i = 0; i < 25; ++i) {
    const double splitting = rng.uniform(50.0, 800.0) * (rng.uniform() < 0.5 ? -1 : 1);
    const double omega = rng.uniform(0.1, 1.0) * 0.01 * std::abs(splitting);
    const double delta = rng.uniform(-1.0, 1.0);
    const double t = rng.uniform(0.05, 2.0);

    PulseSequence seq;
    seq.elements = {Pulse{PulseAxis::kX, omega, t}};
    const double p_engine = evolve_sequence(seq, delta, DecoherenceParams::none());

    const auto ref = testsup::integrate_three_level(omega, 0.0, delta, splitting, t);
    REQUIRE_THAT(p_engine, WithinAbs(ref.p_a, 1e-6));
  }
}

TEST_CASE("two-level reduction validity boundary with a coupled spectator") {
  // with the spectator really driven, the populations deviate at order
  // (Omega / 2 Delta)^2; this documents where the reduction stops holding
  testsup::Rng rng(4096);
  for (int i = 0; i < 10; ++i) {
    const double splitting = rng.uniform(100.0, 800.0);
    const double omega = 0.01 * splitting;
    const double t = rng.uniform(0.2, 1.5);

    PulseSequence seq;
    seq.elements = {Pulse{PulseAxis::kX, omega, t}};
    const double p_engine = evolve_sequence(seq, 0.0, DecoherenceParams::none());
    const auto ref = testsup::integrate_three_level(omega, omega, 0.0, splitting, t);

    const double err = std::abs(p_engine - ref.p_a);
    const double scale = (omega / (2.0 * splitting)) * (omega / (2.0 * splitting));
    REQUIRE(err < 100.0 * scale + 1e-9);
    REQUIRE(ref.p_s < 4.0 * scale + 1e-9);
  }
}
