// Coherent two-level dynamics in the rotating frame: Rabi traces, exact
// pulse-rotation composition for echo sequences, closed-form decoherence
// envelopes and the fits used to extract (T2, alpha) and Rabi frequencies.
//
// Conventions: a pulse of Rabi frequency Omega (MHz) detuned by delta
// rotates the Bloch vector by 2*pi*sqrt(Omega^2 + delta^2)*t about
// (Omega, 0, delta)/|.|; populations follow
//   P(t) = 1 - (Omega^2/Omega_eff^2) sin^2(pi Omega_eff t).
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "hybridsim/params.hpp"
#include "hybridsim/units.hpp"

namespace hybridsim {

enum class PulseAxis { kX, kY };

struct Pulse {
  PulseAxis axis = PulseAxis::kX;
  double rabi_frequency = 1.0;  // MHz
  double duration = 0.0;        // us
};

struct Delay {
  double duration = 0.0;  // us
};

// Ordered pulses and free-evolution delays; readout of the initial-state
// population is implied at the end.
struct PulseSequence {
  std::vector<std::variant<Pulse, Delay>> elements;

  void validate() const {
    if (elements.empty()) {
      throw std::invalid_argument("PulseSequence: at least one element required");
    }
    for (const auto& e : elements) {
      const double d = std::holds_alternative<Pulse>(e) ? std::get<Pulse>(e).duration
                                                        : std::get<Delay>(e).duration;
      if (!(d >= 0.0) || !std::isfinite(d)) {
        throw std::invalid_argument("PulseSequence: durations must be >= 0");
      }
      if (std::holds_alternative<Pulse>(e) && std::get<Pulse>(e).rabi_frequency <= 0.0) {
        throw std::invalid_argument("PulseSequence: pulse rabi_frequency must be > 0");
      }
    }
  }

  double total_free_time() const {
    double t = 0.0;
    for (const auto& e : elements) {
      if (std::holds_alternative<Delay>(e)) t += std::get<Delay>(e).duration;
    }
    return t;
  }
};

// Free-evolution decoherence envelope exp(-(t/T2)^alpha) plus the
// drive-dependent Rabi envelope time constant.
struct DecoherenceParams {
  double t2 = std::numeric_limits<double>::infinity();               // us
  double stretch_exponent = 1.0;                                     // alpha
  double rabi_decay_time = std::numeric_limits<double>::infinity();  // us

  void validate() const {
    detail::require(t2 > 0.0, "decoherence.t2_us must be > 0");
    detail::require(stretch_exponent > 0.0 && stretch_exponent <= 4.0,
                    "decoherence.alpha must be in (0, 4]");
    detail::require(rabi_decay_time > 0.0, "decoherence.rabi_decay_time_us must be > 0");
  }

  static DecoherenceParams none() { return DecoherenceParams{}; }
};

// Omega = ge * b_perp / sqrt(2): |0> <-> |-+1> matrix element under a
// linearly polarized transverse drive in the rotating-wave approximation.
inline double rabi_frequency(double b_perp_gauss, const MaterialParams& params) {
  if (b_perp_gauss < 0.0) throw std::domain_error("rabi_frequency: b_perp must be >= 0");
  return params.gamma_e * b_perp_gauss / std::sqrt(2.0);
}

// Driven population of the initial state over t_grid:
//   P(t) = 1 - (Omega^2/Omega_eff^2) sin^2(pi Omega_eff t) exp(-t/t_rabi)
inline std::vector<double> rabi_trace(double omega, double detuning,
                                      const std::vector<double>& t_grid,
                                      const DecoherenceParams& dec) {
  dec.validate();
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (t_grid[i] < 0.0 || (i > 0 && t_grid[i] < t_grid[i - 1])) {
      throw std::invalid_argument("rabi_trace: t grid must be sorted and >= 0");
    }
  }
  const double om_eff2 = omega * omega + detuning * detuning;
  const double om_eff = std::sqrt(om_eff2);
  const double contrast = om_eff2 > 0.0 ? omega * omega / om_eff2 : 0.0;
  std::vector<double> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    const double env = std::isfinite(dec.rabi_decay_time)
                           ? std::exp(-t / dec.rabi_decay_time)
                           : 1.0;
    const double s = std::sin(kPi * om_eff * t);
    out.push_back(1.0 - contrast * s * s * env);
  }
  return out;
}

namespace dynamics_detail {

using Matrix2cd = Eigen::Matrix2cd;

// exp(-i 2*pi (omega/2 sigma_axis + delta/2 sigma_z) * t) in closed form.
inline Matrix2cd rotation(PulseAxis axis, double omega, double delta, double t) {
  const double om_eff = std::sqrt(omega * omega + delta * delta);
  const double half_angle = kPi * om_eff * t;  // (2*pi*om_eff*t)/2
  Matrix2cd u = std::cos(half_angle) * Matrix2cd::Identity();
  if (om_eff > 0.0) {
    const std::complex<double> i(0.0, 1.0);
    const double s = std::sin(half_angle) / om_eff;
    Matrix2cd n_sigma = Matrix2cd::Zero();
    if (axis == PulseAxis::kX) {
      n_sigma << delta, omega, omega, -delta;
    } else {
      n_sigma << delta, std::complex<double>(0.0, -omega),
          std::complex<double>(0.0, omega), -delta;
    }
    u -= i * s * n_sigma;
  }
  return u;
}

inline Matrix2cd z_rotation(double delta, double t) {
  const std::complex<double> i(0.0, 1.0);
  Matrix2cd u = Matrix2cd::Zero();
  u(0, 0) = std::exp(-i * (kPi * delta * t));
  u(1, 1) = std::exp(i * (kPi * delta * t));
  return u;
}

}  // namespace dynamics_detail

// Composes exact rotating-frame rotations; free evolution dephases the
// coherence so the product over all delays equals the stretched-exponential
// envelope of the *total* free time (the form the echo data is fit to).
// Returns the population transferred out of the initial state (1 for a
// perfect pi pulse, 0 for a sequence composing to the identity).
inline double evolve_sequence(const PulseSequence& seq, double detuning,
                              const DecoherenceParams& dec) {
  seq.validate();
  dec.validate();
  const double t_free = seq.total_free_time();
  double total_damp = 1.0;
  if (std::isfinite(dec.t2) && t_free > 0.0) {
    total_damp = std::exp(-std::pow(t_free / dec.t2, dec.stretch_exponent));
  }

  Eigen::Matrix2cd rho = Eigen::Matrix2cd::Zero();
  rho(0, 0) = 1.0;
  for (const auto& e : seq.elements) {
    if (std::holds_alternative<Pulse>(e)) {
      const Pulse& p = std::get<Pulse>(e);
      const auto u = dynamics_detail::rotation(p.axis, p.rabi_frequency, detuning,
                                               p.duration);
      rho = u * rho * u.adjoint();
    } else {
      const Delay& d = std::get<Delay>(e);
      const auto u = dynamics_detail::z_rotation(detuning, d.duration);
      rho = u * rho * u.adjoint();
      if (total_damp < 1.0 && d.duration > 0.0) {
        // share of the total envelope proportional to this delay
        const double damp = std::pow(total_damp, d.duration / t_free);
        rho(0, 1) *= damp;
        rho(1, 0) *= damp;
      }
    }
  }
  return std::real(rho(1, 1));
}

// pi/2 - tau - pi - tau - pi/2 echo with pulse durations set by the drive's
// instantaneous Rabi frequency; total free evolution = total_free_time.
inline PulseSequence make_hahn(double total_free_time, double omega) {
  if (omega <= 0.0) throw std::invalid_argument("make_hahn: omega must be > 0");
  if (total_free_time < 0.0) throw std::invalid_argument("make_hahn: negative time");
  const double t_pi = 1.0 / (2.0 * omega);
  const double t_half = t_pi / 2.0;
  PulseSequence seq;
  seq.elements = {Pulse{PulseAxis::kX, omega, t_half}, Delay{total_free_time / 2.0},
                  Pulse{PulseAxis::kX, omega, t_pi}, Delay{total_free_time / 2.0},
                  Pulse{PulseAxis::kX, omega, t_half}};
  return seq;
}

// pi/2_x - [tau/2 - pi_y - tau/2]^n - pi/2_x with n refocusing pulses.
inline PulseSequence make_cpmg(int n_pulses, double total_free_time, double omega) {
  if (n_pulses < 1) throw std::invalid_argument("make_cpmg: need n >= 1");
  if (omega <= 0.0) throw std::invalid_argument("make_cpmg: omega must be > 0");
  if (total_free_time < 0.0) throw std::invalid_argument("make_cpmg: negative time");
  const double t_pi = 1.0 / (2.0 * omega);
  const double tau = total_free_time / n_pulses;
  PulseSequence seq;
  seq.elements.emplace_back(Pulse{PulseAxis::kX, omega, t_pi / 2.0});
  for (int i = 0; i < n_pulses; ++i) {
    seq.elements.emplace_back(Delay{tau / 2.0});
    seq.elements.emplace_back(Pulse{PulseAxis::kY, omega, t_pi});
    seq.elements.emplace_back(Delay{tau / 2.0});
  }
  seq.elements.emplace_back(Pulse{PulseAxis::kX, omega, t_pi / 2.0});
  return seq;
}

// Normalized echo amplitude: the decohered population excursion from 1/2
// relative to the ideal (decoherence-free) run of the same sequence.
inline double echo_amplitude(const PulseSequence& seq, double detuning,
                             const DecoherenceParams& dec) {
  const double p = evolve_sequence(seq, detuning, dec);
  const double p_ideal = evolve_sequence(seq, detuning, DecoherenceParams::none());
  if (std::abs(p_ideal - 0.5) < 1e-9) {
    throw std::runtime_error("echo_amplitude: sequence does not form an echo");
  }
  return (p - 0.5) / (p_ideal - 0.5);
}

// Closed-form envelopes exp(-(t/T2)^alpha) the echo data is fit to.
inline std::vector<double> hahn_trace(const std::vector<double>& t_grid,
                                      const DecoherenceParams& dec) {
  dec.validate();
  std::vector<double> out;
  out.reserve(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (t_grid[i] < 0.0 || (i > 0 && t_grid[i] < t_grid[i - 1])) {
      throw std::invalid_argument("hahn_trace: t grid must be sorted and >= 0");
    }
    out.push_back(std::exp(-std::pow(t_grid[i] / dec.t2, dec.stretch_exponent)));
  }
  return out;
}

inline std::vector<double> cpmg_trace(int n_pulses, const std::vector<double>& t_grid,
                                      const DecoherenceParams& dec) {
  if (n_pulses < 1) throw std::invalid_argument("cpmg_trace: need n >= 1");
  return hahn_trace(t_grid, dec);
}

struct EnvelopeFit {
  double t2 = 0.0;
  double alpha = 0.0;
  double rms_residual = 0.0;
  int iterations = 0;
};

class FitError : public std::runtime_error {
 public:
  FitError(std::string what, std::vector<double> history)
      : std::runtime_error(std::move(what)), residual_history(std::move(history)) {}
  std::vector<double> residual_history;
};

// Nonlinear least squares for y = exp(-(t/T2)^alpha): log-domain
// linearization seeds (ln(-ln y) is linear in ln t), then damped
// Gauss-Newton in (ln T2, ln alpha).
inline EnvelopeFit fit_envelope(const std::vector<double>& t,
                                const std::vector<double>& y) {
  if (t.size() != y.size()) throw std::invalid_argument("fit_envelope: size mismatch");
  if (t.size() < 5) throw std::invalid_argument("fit_envelope: need >= 5 points");
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0.0 && y[i] <= 1.0)) {
      throw std::invalid_argument("fit_envelope: signals must be in (0, 1]");
    }
  }

  // seed from points with measurable decay
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n_seed = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] <= 0.0 || y[i] >= 1.0 - 1e-9 || y[i] < 1e-12) continue;
    const double X = std::log(t[i]);
    const double Y = std::log(-std::log(y[i]));
    sx += X;
    sy += Y;
    sxx += X * X;
    sxy += X * Y;
    ++n_seed;
  }
  if (n_seed < 2) {
    throw FitError("fit_envelope: degenerate data (no resolvable decay)", {});
  }
  const double denom = n_seed * sxx - sx * sx;
  if (std::abs(denom) < 1e-12) {
    throw FitError("fit_envelope: degenerate time grid", {});
  }
  double alpha = (n_seed * sxy - sx * sy) / denom;
  double intercept = (sy - alpha * sx) / n_seed;
  if (!(alpha > 0.0)) {
    throw FitError("fit_envelope: seed produced non-positive alpha (no decay?)", {});
  }
  double log_t2 = -intercept / alpha;
  double log_alpha = std::log(alpha);

  auto rms = [&](double lt2, double la) {
    const double T2 = std::exp(lt2), A = std::exp(la);
    double acc = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double m = std::exp(-std::pow(t[i] / T2, A));
      acc += (m - y[i]) * (m - y[i]);
    }
    return std::sqrt(acc / static_cast<double>(t.size()));
  };

  std::vector<double> history{rms(log_t2, log_alpha)};
  double lambda = 1e-3;
  constexpr int kMaxIter = 200;
  int it = 0;
  for (; it < kMaxIter; ++it) {
    const double T2 = std::exp(log_t2), A = std::exp(log_alpha);
    // normal equations for the 2-parameter Jacobian
    double jtj00 = 0, jtj01 = 0, jtj11 = 0, jtr0 = 0, jtr1 = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] <= 0.0) continue;
      const double u = std::pow(t[i] / T2, A);
      const double m = std::exp(-u);
      const double r = m - y[i];
      const double d_lt2 = m * A * u;                         // d m / d ln T2
      const double d_la = -m * u * std::log(t[i] / T2) * A;   // d m / d ln alpha
      jtj00 += d_lt2 * d_lt2;
      jtj01 += d_lt2 * d_la;
      jtj11 += d_la * d_la;
      jtr0 += d_lt2 * r;
      jtr1 += d_la * r;
    }
    const double a00 = jtj00 * (1.0 + lambda), a11 = jtj11 * (1.0 + lambda);
    const double det = a00 * a11 - jtj01 * jtj01;
    if (std::abs(det) < 1e-30) break;
    const double step_lt2 = -(a11 * jtr0 - jtj01 * jtr1) / det;
    const double step_la = -(-jtj01 * jtr0 + a00 * jtr1) / det;
    const double cand_rms = rms(log_t2 + step_lt2, log_alpha + step_la);
    if (cand_rms <= history.back()) {
      log_t2 += step_lt2;
      log_alpha += step_la;
      history.push_back(cand_rms);
      lambda = std::max(lambda * 0.5, 1e-12);
      if (std::abs(step_lt2) < 1e-13 && std::abs(step_la) < 1e-13) break;
    } else {
      lambda *= 10.0;
      history.push_back(history.back());
      if (lambda > 1e8) break;
    }
  }
  if (it == kMaxIter) {
    throw FitError("fit_envelope: no convergence after max iterations",
                   std::move(history));
  }

  EnvelopeFit fit;
  fit.t2 = std::exp(log_t2);
  fit.alpha = std::exp(log_alpha);
  fit.rms_residual = history.back();
  fit.iterations = it;
  return fit;
}

struct RabiFit {
  double omega = 0.0;       // MHz
  double amplitude = 0.0;   // oscillation contrast
  double decay_time = 0.0;  // us (inf when no decay resolved)
  double rms_residual = 0.0;
};

// Frequency of a damped Rabi trace P(t) = 1 - A sin^2(pi Omega t) e^{-t/tau}.
// Seeds Omega from mean-crossing counting, then Gauss-Newton refines
// (Omega, A, 1/tau).
inline RabiFit fit_rabi_frequency(const std::vector<double>& t,
                                  const std::vector<double>& y) {
  if (t.size() != y.size() || t.size() < 8) {
    throw std::invalid_argument("fit_rabi_frequency: need >= 8 samples");
  }
  const double span = t.back() - t.front();
  if (span <= 0.0) throw std::invalid_argument("fit_rabi_frequency: empty time span");

  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
  double lo = *std::min_element(y.begin(), y.end());
  double hi = *std::max_element(y.begin(), y.end());
  if (hi - lo < 1e-12) {
    RabiFit flat;
    flat.omega = 0.0;
    flat.amplitude = 0.0;
    flat.decay_time = std::numeric_limits<double>::infinity();
    return flat;
  }
  int crossings = 0;
  for (std::size_t i = 1; i < y.size(); ++i) {
    if ((y[i - 1] - mean) * (y[i] - mean) < 0.0) ++crossings;
  }
  if (crossings < 2) {
    throw std::runtime_error(
        "fit_rabi_frequency: insufficient data (less than one full oscillation)");
  }
  double omega = crossings / (2.0 * span);
  double amp = hi - lo;
  double rate = 0.0;  // 1/tau

  auto model = [](double omega_, double amp_, double rate_, double tt) {
    const double s = std::sin(kPi * omega_ * tt);
    return 1.0 - amp_ * s * s * std::exp(-rate_ * tt);
  };
  auto rms = [&](double o, double a, double r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double d = model(o, a, r, t[i]) - y[i];
      acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(t.size()));
  };

  double lambda = 1e-3;
  double best = rms(omega, amp, rate);
  for (int it = 0; it < 200; ++it) {
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double tt = t[i];
      const double s = std::sin(kPi * omega * tt);
      const double c = std::cos(kPi * omega * tt);
      const double e = std::exp(-rate * tt);
      const double r = model(omega, amp, rate, tt) - y[i];
      Eigen::Vector3d j;
      j[0] = -amp * e * 2.0 * s * c * kPi * tt;  // d/d omega
      j[1] = -e * s * s;                         // d/d amp
      j[2] = amp * s * s * e * tt;               // d/d rate
      jtj += j * j.transpose();
      jtr += j * r;
    }
    Eigen::Matrix3d a = jtj;
    for (int d = 0; d < 3; ++d) a(d, d) *= (1.0 + lambda);
    const Eigen::Vector3d step = a.ldlt().solve(-jtr);
    const double cand = rms(omega + step[0], amp + step[1], rate + step[2]);
    if (cand <= best) {
      omega += step[0];
      amp += step[1];
      rate += step[2];
      best = cand;
      lambda = std::max(lambda * 0.5, 1e-12);
      if (step.cwiseAbs().maxCoeff() < 1e-13) break;
    } else {
      lambda *= 10.0;
      if (lambda > 1e8) break;
    }
  }

  RabiFit fit;
  fit.omega = std::abs(omega);
  fit.amplitude = amp;
  fit.decay_time = rate > 1e-12 ? 1.0 / rate : std::numeric_limits<double>::infinity();
  fit.rms_residual = best;
  return fit;
}

struct PowerScaling {
  double slope = 0.0;      // MHz per sqrt(mW)
  double intercept = 0.0;  // MHz
  double r_squared = 0.0;
  std::vector<double> sqrt_powers;
  std::vector<double> omegas;
};

// Regresses Omega against sqrt(P) through whatever coupling chain the
// caller supplies as omega_of_power.
template <typename OmegaFn>
PowerScaling power_scaling_check(const std::vector<double>& powers_mw,
                                 OmegaFn&& omega_of_power) {
  std::vector<double> distinct = powers_mw;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) {
    throw std::invalid_argument("power_scaling_check: need >= 3 distinct powers");
  }
  PowerScaling out;
  for (double p : distinct) {
    if (p < 0.0) throw std::domain_error("power_scaling_check: negative power");
    out.sqrt_powers.push_back(std::sqrt(p));
    out.omegas.push_back(omega_of_power(p));
  }
  const std::size_t n = out.sqrt_powers.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += out.sqrt_powers[i];
    sy += out.omegas[i];
    sxx += out.sqrt_powers[i] * out.sqrt_powers[i];
    sxy += out.sqrt_powers[i] * out.omegas[i];
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-30) {
    throw std::invalid_argument("power_scaling_check: degenerate power grid");
  }
  out.slope = (n * sxy - sx * sy) / denom;
  out.intercept = (sy - out.slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double mean = sy / n;
  for (std::size_t i = 0; i < n; ++i) {
    const double fit = out.slope * out.sqrt_powers[i] + out.intercept;
    ss_res += (out.omegas[i] - fit) * (out.omegas[i] - fit);
    ss_tot += (out.omegas[i] - mean) * (out.omegas[i] - mean);
  }
  out.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return out;
}

}  // namespace hybridsim
