// Shared test-only machinery: a platform-independent RNG for property
// tests, analytic dispersion derivatives, and a direct 3-level
// rotating-frame integrator (RK4 with step halving). These stay
// independent of the production code paths they check.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>

namespace testsup {

// SplitMix64-based uniform doubles, reproducible everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  double uniform() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

// d f / d k of the surface branch f^2 = fH(fH+fM) + (fM^2/4)(1 - e^{-2kd})
inline double desw_dfdk(double k, double f_h, double f_m, double d) {
  const double c = 0.25 * f_m * f_m;
  const double f = std::sqrt(f_h * (f_h + f_m) + c * (1.0 - std::exp(-2.0 * k * d)));
  return c * d * std::exp(-2.0 * k * d) / f;
}

// d f / d k of the volume branch f^2 = fH(fH + fM (1-e^{-u})/u), u = kd
inline double bvmsw_dfdk(double k, double f_h, double f_m, double d) {
  const double u = k * d;
  const double g = (1.0 - std::exp(-u)) / u;
  const double gp = (std::exp(-u) * (1.0 + u) - 1.0) / (u * u);
  const double f = std::sqrt(f_h * (f_h + f_m * g));
  return f_h * f_m * gp * d / (2.0 * f);
}

// Final level populations of a 3-level rotating-frame system
//   H/2pi = [[0, Wa/2, Ws/2], [Wa/2, da, 0], [Ws/2, 0, ds]]
// integrated from |g> with RK4; the step is halved until two successive
// refinements agree to `tol` on every population.
struct ThreeLevelResult {
  double p_g = 0.0, p_a = 0.0, p_s = 0.0;
};

inline ThreeLevelResult integrate_three_level(double omega_a, double omega_s,
                                              double delta_a, double delta_s, double t,
                                              double tol = 1e-10) {
  using Vec = Eigen::Vector3cd;
  using Mat = Eigen::Matrix3cd;
  const double two_pi = 2.0 * 3.14159265358979323846;
  Mat h = Mat::Zero();
  h(0, 1) = h(1, 0) = omega_a / 2.0;
  h(0, 2) = h(2, 0) = omega_s / 2.0;
  h(1, 1) = delta_a;
  h(2, 2) = delta_s;
  h *= two_pi;
  const std::complex<double> mi(0.0, -1.0);

  auto run = [&](int steps) {
    Vec psi = Vec::Zero();
    psi(0) = 1.0;
    const double dt = t / steps;
    for (int i = 0; i < steps; ++i) {
      const Vec k1 = mi * (h * psi);
      const Vec k2 = mi * (h * (psi + 0.5 * dt * k1));
      const Vec k3 = mi * (h * (psi + 0.5 * dt * k2));
      const Vec k4 = mi * (h * (psi + dt * k3));
      psi += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return psi;
  };

  // scale the starting resolution with the fastest frequency present
  const double f_scale =
      std::max({std::abs(omega_a), std::abs(omega_s), std::abs(delta_a),
                std::abs(delta_s), 1.0});
  int steps = static_cast<int>(std::ceil(40.0 * f_scale * t)) + 16;
  Vec prev = run(steps);
  for (int iter = 0; iter < 14; ++iter) {
    steps *= 2;
    const Vec cur = run(steps);
    double diff = 0.0;
    for (int i = 0; i < 3; ++i) {
      diff = std::max(diff, std::abs(std::norm(cur(i)) - std::norm(prev(i))));
    }
    prev = cur;
    if (diff < tol) break;
  }
  ThreeLevelResult r;
  r.p_g = std::norm(prev(0));
  r.p_a = std::norm(prev(1));
  r.p_s = std::norm(prev(2));
  return r;
}

// Unitary exp(-i 2pi H t) via eigendecomposition, the reference the
// closed-form pulse rotations are checked against.
inline Eigen::Matrix2cd matrix_exponential_2x2(const Eigen::Matrix2cd& h_mhz, double t) {
  const double two_pi = 2.0 * 3.14159265358979323846;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(h_mhz);
  const auto& v = es.eigenvectors();
  Eigen::Matrix2cd d = Eigen::Matrix2cd::Zero();
  for (int i = 0; i < 2; ++i) {
    d(i, i) = std::exp(std::complex<double>(0.0, -two_pi * es.eigenvalues()(i) * t));
  }
  return v * d * v.adjoint();
}

}  // namespace testsup
