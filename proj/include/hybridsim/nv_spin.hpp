// NV ground-state spin physics: the S = 1 Hamiltonian H = D Sz^2 + ge B.S
// in the defect frame, transition frequencies for arbitrary orientation,
// the matched-orientation search used for low-field/high-field comparisons
// and deterministic random ensembles.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hybridsim/params.hpp"
#include "hybridsim/units.hpp"

namespace hybridsim {

// Spin-1 operators in the |+1>, |0>, |-1> basis.
struct SpinOperatorSet {
  Eigen::Matrix3cd sx;
  Eigen::Matrix3cd sy;
  Eigen::Matrix3cd sz;
  Eigen::Matrix3cd identity;

  static const SpinOperatorSet& instance() {
    static const SpinOperatorSet ops = [] {
      using namespace std::complex_literals;
      SpinOperatorSet s;
      const double r = 1.0 / std::sqrt(2.0);
      s.sx << 0, r, 0, r, 0, r, 0, r, 0;
      s.sy << 0.0, -1i * r, 0.0, 1i * r, 0.0, -1i * r, 0.0, 1i * r, 0.0;
      s.sz << 1, 0, 0, 0, 0, 0, 0, 0, -1;
      s.identity.setIdentity();
      return s;
    }();
    return ops;
  }
};

// One NV orientation in a bias field. The problem is azimuthally symmetric
// around the defect axis, so the orientation reduces to the polar angle
// theta_nv between the axis and the field.
struct NVConfig {
  double theta_nv = 0.0;  // radians, in [0, pi/2] for an axis
  double b_ext = 0.0;     // gauss
  double d_zfs = 2870.0;  // MHz
  double gamma_e = 2.8024;  // MHz/gauss

  static NVConfig from(const MaterialParams& p, double theta, double b_gauss) {
    NVConfig nv;
    nv.theta_nv = theta;
    nv.b_ext = b_gauss;
    nv.d_zfs = p.d_zfs;
    nv.gamma_e = p.gamma_e;
    return nv;
  }

  void validate() const {
    detail::require(b_ext >= 0.0, "nv.b_ext must be >= 0");
    detail::require(std::isfinite(theta_nv), "nv.theta_nv must be finite");
    detail::require(d_zfs > 0.0 && gamma_e > 0.0, "nv constants must be positive");
  }
};

// H = D Sz^2 + ge B (cos(theta) Sz + sin(theta) Sx), MHz. Hermitian with
// trace 2D for any field.
inline Eigen::Matrix3cd hamiltonian(const NVConfig& nv) {
  nv.validate();
  const auto& s = SpinOperatorSet::instance();
  const double bz = nv.b_ext * std::cos(nv.theta_nv);
  const double bx = nv.b_ext * std::sin(nv.theta_nv);
  return nv.d_zfs * (s.sz * s.sz) + nv.gamma_e * (bz * s.sz + bx * s.sx);
}

// Energies of both spin transitions out of the ground sublevel (the
// lowest-energy eigenstate, adiabatic labeling), sorted ascending, MHz.
inline std::pair<double, double> transition_frequencies(const NVConfig& nv) {
  const Eigen::Matrix3cd h = hamiltonian(nv);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> solver(h);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("transition_frequencies: eigensolver failed");
  }
  const auto& ev = solver.eigenvalues();  // ascending
  return {ev[1] - ev[0], ev[2] - ev[0]};
}

struct MatchedOrientation {
  double theta_nv = 0.0;   // radians
  double f_common = 0.0;   // MHz, shared lower-branch frequency
  double residual = 0.0;   // MHz, |f_lower(b_high) - f_lower(b_low)|
};

// Thrown when no orientation equalizes the lower branches; carries the
// scanned residual curve for diagnostics.
class NoMatchingOrientation : public std::runtime_error {
 public:
  NoMatchingOrientation(std::string what, std::vector<double> thetas,
                        std::vector<double> residuals)
      : std::runtime_error(std::move(what)),
        scanned_thetas(std::move(thetas)),
        scanned_residuals(std::move(residuals)) {}
  std::vector<double> scanned_thetas;
  std::vector<double> scanned_residuals;
};

// Finds theta_nv in [0, pi/2] such that the lower ground-state transition
// has the same frequency at b_low and b_high (bisection on the residual).
// f_target picks the root with the closest common frequency when several
// sign changes exist.
inline MatchedOrientation find_matching_orientation(double f_target, double b_low,
                                                    double b_high,
                                                    const MaterialParams& params,
                                                    double tol_mhz = 1.0e-6) {
  if (!(b_low < b_high)) {
    throw std::invalid_argument(
        "find_matching_orientation: need b_low < b_high (degenerate bracket)");
  }
  auto f_lower = [&](double b, double theta) {
    return transition_frequencies(NVConfig::from(params, theta, b)).first;
  };
  auto residual = [&](double theta) {
    return f_lower(b_high, theta) - f_lower(b_low, theta);
  };

  constexpr int kScan = 128;
  std::vector<double> thetas(kScan + 1), residuals(kScan + 1);
  for (int i = 0; i <= kScan; ++i) {
    thetas[i] = (kPi / 2.0) * i / kScan;
    residuals[i] = residual(thetas[i]);
  }

  MatchedOrientation best;
  bool found = false;
  for (int i = 0; i < kScan; ++i) {
    if (residuals[i] == 0.0 || residuals[i] * residuals[i + 1] < 0.0) {
      double lo = thetas[i], hi = thetas[i + 1];
      double r_lo = residuals[i];
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double r_mid = residual(mid);
        if (std::abs(r_mid) < tol_mhz || hi - lo < 1e-14) {
          lo = hi = mid;
          break;
        }
        if (r_lo * r_mid <= 0.0) {
          hi = mid;
        } else {
          lo = mid;
          r_lo = r_mid;
        }
      }
      const double theta = 0.5 * (lo + hi);
      MatchedOrientation cand;
      cand.theta_nv = theta;
      cand.f_common = f_lower(b_high, theta);
      cand.residual = std::abs(residual(theta));
      if (!found || std::abs(cand.f_common - f_target) < std::abs(best.f_common - f_target)) {
        best = cand;
        found = true;
      }
    }
  }
  if (!found) {
    throw NoMatchingOrientation(
        "find_matching_orientation: no orientation equalizes the lower branch "
        "between " + std::to_string(b_low) + " G and " + std::to_string(b_high) +
            " G (residual curve attached)",
        std::move(thetas), std::move(residuals));
  }
  return best;
}

namespace nv_detail {

// SplitMix64: tiny, deterministic across platforms.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double uniform01(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

}  // namespace nv_detail

// n defect-axis polar angles drawn uniformly by sphere area (cos(theta)
// uniform on [0, 1] after folding the axis into the upper hemisphere).
// Deterministic for a fixed seed, independent of platform.
inline std::vector<double> ensemble_orientations(int n, std::uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("ensemble_orientations: n must be > 0");
  std::uint64_t state = seed;
  std::vector<double> thetas;
  thetas.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double c = nv_detail::uniform01(state);  // cos(theta_nv) in [0, 1)
    thetas.push_back(std::acos(c));
  }
  return thetas;
}

}  // namespace hybridsim
