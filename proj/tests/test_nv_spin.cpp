#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "hybridsim/nv_spin.hpp"
#include "test_support.hpp"

using namespace hybridsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const MaterialParams& params() {
  static const MaterialParams p = default_params();
  return p;
}

// exact 2x2 reduction for a perpendicular field: levels
// (D +- sqrt(D^2 + 4 b^2))/2 and D, with b = ge B
std::pair<double, double> perpendicular_oracle(double b_gauss) {
  const double d = params().d_zfs;
  const double b = params().gamma_e * b_gauss;
  const double root = std::sqrt(d * d + 4.0 * b * b);
  const double ground = (d - root) / 2.0;
  const double mid = d;
  const double top = (d + root) / 2.0;
  return {mid - ground, top - ground};
}

}  // namespace

TEST_CASE("spin-1 operators: hermiticity and commutation") {
  const auto& s = SpinOperatorSet::instance();
  CHECK((s.sx - s.sx.adjoint()).norm() < 1e-15);
  CHECK((s.sy - s.sy.adjoint()).norm() < 1e-15);
  CHECK((s.sz - s.sz.adjoint()).norm() < 1e-15);
  const Eigen::Matrix3cd comm = s.sx * s.sy - s.sy * s.sx;
  const Eigen::Matrix3cd expected = std::complex<double>(0.0, 1.0) * s.sz;
  CHECK((comm - expected).norm() < 1e-12);
}

TEST_CASE("hamiltonian at zero field and trace identity") {
  const NVConfig nv = NVConfig::from(params(), 0.3, 0.0);
  const auto h = hamiltonian(nv);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(h);
  CHECK_THAT(es.eigenvalues()(0), WithinAbs(0.0, 1e-9));
  CHECK_THAT(es.eigenvalues()(1), WithinAbs(2870.0, 1e-9));
  CHECK_THAT(es.eigenvalues()(2), WithinAbs(2870.0, 1e-9));

  testsup::Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const NVConfig any = NVConfig::from(params(), rng.uniform(0.0, kPi / 2.0),
                                        rng.uniform(0.0, 250.0));
    CHECK_THAT(std::real(hamiltonian(any).trace()), WithinRel(2.0 * 2870.0, 1e-12));
  }
}

TEST_CASE("aligned field: transitions D +- ge B") {
  const auto t100 = transition_frequencies(NVConfig::from(params(), 0.0, 100.0));
  CHECK_THAT(t100.first, WithinAbs(2589.76, 1e-6));
  CHECK_THAT(t100.second, WithinAbs(3150.24, 1e-6));

  const auto t15 = transition_frequencies(NVConfig::from(params(), 0.0, 15.0));
  CHECK_THAT(t15.first, WithinAbs(2827.964, 1e-6));
  CHECK_THAT(t15.second, WithinAbs(2912.036, 1e-6));

  testsup::Rng rng(17);
  for (int i = 0; i < 100; ++i) {
    const double b = rng.uniform(0.0, 250.0);
    const auto tr = transition_frequencies(NVConfig::from(params(), 0.0, b));
    const double lo = 2870.0 - 2.8024 * b;
    const double hi = 2870.0 + 2.8024 * b;
    CHECK(std::abs(tr.first - lo) / 2870.0 < 1e-9);
    CHECK(std::abs(tr.second - hi) / 2870.0 < 1e-9);
  }
}

TEST_CASE("perpendicular field against the 2x2 closed form") {
  const auto t145 = transition_frequencies(NVConfig::from(params(), kPi / 2.0, 145.0));
  const auto oracle = perpendicular_oracle(145.0);
  CHECK_THAT(t145.first, WithinRel(oracle.first, 1e-12));
  CHECK_THAT(t145.second, WithinRel(oracle.second, 1e-12));
  CHECK_THAT(t145.first, WithinAbs(2926.42, 0.01));
  CHECK_THAT(t145.second, WithinAbs(2982.85, 0.01));
}

TEST_CASE("transition ordering, degeneracy at B = 0, continuity in B") {
  testsup::Rng rng(23);
  for (int i = 0; i < 50; ++i) {
    const double theta = rng.uniform(0.0, kPi / 2.0);
    const auto t0 = transition_frequencies(NVConfig::from(params(), theta, 0.0));
    CHECK_THAT(t0.first, WithinAbs(2870.0, 1e-9));
    CHECK_THAT(t0.second, WithinAbs(2870.0, 1e-9));

    double prev_lo = t0.first, prev_hi = t0.second;
    const double db = 2.0;
    for (double b = db; b <= 250.0; b += db) {
      const auto tr = transition_frequencies(NVConfig::from(params(), theta, b));
      REQUIRE(tr.first <= tr.second);
      const double max_jump = 1.5 * 2.8024 * db + 0.5;
      REQUIRE(std::abs(tr.first - prev_lo) < max_jump);
      REQUIRE(std::abs(tr.second - prev_hi) < max_jump);
      prev_lo = tr.first;
      prev_hi = tr.second;
    }
  }
}

TEST_CASE("matched orientation between 15 G and 145 G") {
  const auto match = find_matching_orientation(2862.0, 15.0, 145.0, params());
  CHECK(rad_to_deg(match.theta_nv) > 75.0);
  CHECK(rad_to_deg(match.theta_nv) < 90.0);
  CHECK_THAT(match.f_common, WithinAbs(2862.0, 5.0));
  CHECK(match.residual < 1e-6);

  // the residual it solved really is zero there
  const double lo =
      transition_frequencies(NVConfig::from(params(), match.theta_nv, 15.0)).first;
  const double hi =
      transition_frequencies(NVConfig::from(params(), match.theta_nv, 145.0)).first;
  CHECK_THAT(lo, WithinAbs(hi, 1e-5));

  CHECK_THROWS_AS(find_matching_orientation(2862.0, 145.0, 145.0, params()),
                  std::invalid_argument);

  // aligned branches differ by ge * dB: no zero at theta = 0
  const double r0 =
      transition_frequencies(NVConfig::from(params(), 0.0, 145.0)).first -
      transition_frequencies(NVConfig::from(params(), 0.0, 15.0)).first;
  CHECK_THAT(r0, WithinAbs(-2.8024 * 130.0, 1e-6));
}

TEST_CASE("ensemble orientations: determinism and sphere statistics") {
  const auto a = ensemble_orientations(500, 99);
  const auto b = ensemble_orientations(500, 99);
  CHECK(a == b);
  CHECK(ensemble_orientations(1, 7).size() == 1);
  CHECK_THROWS_AS(ensemble_orientations(0, 1), std::invalid_argument);

  const int n = 10000;
  const auto big = ensemble_orientations(n, 2024);
  double mean_cos = 0.0;
  for (double th : big) {
    REQUIRE(th >= 0.0);
    REQUIRE(th <= kPi / 2.0);
    mean_cos += std::cos(th);
  }
  mean_cos /= n;
  // uniform-area axis measure: cos(theta) ~ U[0,1], sd of the mean =
  // sqrt(1/12/n)
  const double three_sigma = 3.0 * std::sqrt(1.0 / 12.0 / n);
  CHECK_THAT(mean_cos, WithinAbs(0.5, three_sigma));
}
