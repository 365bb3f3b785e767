// Rate-model of the remote sensing device: target spins driven at their
// Rabi frequency pump a magnonic cavity mode when the Rabi-matching
// condition is met; the cavity's leak field travels down the spin-wave
// waveguide and coherently drives a distant NV, whose oscillation
// frequency encodes the target concentration.
//
// The whole chain is an artifact-level formalization with desk-scale
// placeholder constants; it makes no claim of quantitative fidelity to a
// physical device. Note the N_t * g_single product degeneracy: the
// concentration estimate is only meaningful for a known single-spin
// coupling.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "hybridsim/dynamics.hpp"
#include "hybridsim/magnonics.hpp"
#include "hybridsim/nv_spin.hpp"
#include "hybridsim/params.hpp"

namespace hybridsim {

struct SensingConfig {
  double gamma_target = 2.8024;  // MHz/gauss
  int n_targets = 100;
  double f_cavity = 2862.0;  // MHz, resonant with an NV transition
  double kappa = 1.0;        // 1/us cavity leak rate (also the match width)
  double g_single = 1.0e-3;  // MHz single-target coupling to the cavity
  double b_drive = 2042.5;   // gauss at the targets
  double pump_time = 5.0;    // us
  std::vector<double> tau_grid;  // us, NV interaction times

  void validate() const {
    detail::require(gamma_target > 0.0, "sensing.gamma_target_mhz_per_g must be > 0");
    detail::require(n_targets >= 0, "sensing.n_targets must be >= 0");
    detail::require(f_cavity > 0.0, "sensing.f_cavity_mhz must be > 0");
    detail::require(kappa > 0.0, "sensing.kappa_mhz must be > 0");
    detail::require(g_single > 0.0, "sensing.g_single_mhz must be > 0");
    detail::require(b_drive >= 0.0, "sensing.b_drive_g must be >= 0");
    detail::require(pump_time > 0.0, "sensing.pump_time_us must be > 0");
    detail::require(tau_grid.size() >= 2, "sensing.tau_grid needs >= 2 points");
  }
};

// Everything the leak chain needs besides the SensingConfig itself.
struct SensingContext {
  MaterialParams params;
  DeviceGeometry geometry;  // nd_x is the waveguide length to the ND
  FieldConfig field;        // bias field at the cavity/waveguide
  MagnonicsModel mag_model;
  double leak_field_scale = 20.0;  // gauss at the ND per unit cavity amplitude
  double resonance_tol = 5.0;      // MHz NV-cavity matching tolerance
};

struct SensingTrace {
  std::vector<double> tau_grid;
  std::vector<double> nv_population;
  double inferred_rabi = 0.0;  // MHz
  double nv_rabi = 0.0;        // MHz, closed-form chain prediction
};

// Omega_t = gamma_target * b_drive / 2 (spin-1/2 linear-drive convention).
inline double target_rabi(const SensingConfig& cfg) {
  cfg.validate();
  return cfg.gamma_target * cfg.b_drive / 2.0;
}

// Steady-state-approaching cavity amplitude after pump_time:
//   A = (N g / kappa) * L(Omega_t - f_cavity) * (1 - e^{-kappa t})
// with a Lorentzian matching filter of width kappa.
inline double cavity_amplitude(const SensingConfig& cfg) {
  cfg.validate();
  const double detuning = target_rabi(cfg) - cfg.f_cavity;
  const double match = 1.0 / (1.0 + (detuning / cfg.kappa) * (detuning / cfg.kappa));
  const double steady = cfg.n_targets * cfg.g_single / cfg.kappa;
  return steady * match * (1.0 - std::exp(-cfg.kappa * cfg.pump_time));
}

namespace sensing_detail {

// Waveguide amplitude attenuation over nd_x for the ladder mode nearest
// f_cavity. Requires the cavity frequency to sit inside the spin-wave band.
inline double waveguide_attenuation(const SensingConfig& cfg,
                                    const SensingContext& ctx) {
  const auto ladder = mode_ladder(ctx.field, ctx.params, ctx.geometry, ctx.mag_model);
  const SWMode* best = nullptr;
  double best_dist = ctx.mag_model.line_cutoff;
  for (const SWMode& m : ladder) {
    if (m.frequency <= 0.0) continue;
    const double dist = std::abs(m.frequency - cfg.f_cavity);
    if (dist < best_dist) {
      best_dist = dist;
      best = &m;
    }
  }
  if (best == nullptr) {
    throw std::invalid_argument(
        "sensing: f_cavity lies outside the spin-wave band at the configured bias "
        "field");
  }
  return std::exp(-ctx.geometry.nd_x / best->decay_length);
}

}  // namespace sensing_detail

// Closed-form NV Rabi frequency produced by the chain, MHz.
inline double sensing_nv_rabi(const SensingConfig& cfg, const SensingContext& ctx) {
  const double atten = sensing_detail::waveguide_attenuation(cfg, ctx);
  const double b_leak = ctx.leak_field_scale * cavity_amplitude(cfg) * atten;
  return rabi_frequency(b_leak, ctx.params);
}

// Pump - initialize - interact(tau) - read out, swept over tau_grid.
inline SensingTrace run_protocol(const SensingConfig& cfg, const NVConfig& nv,
                                 const DecoherenceParams& dec,
                                 const SensingContext& ctx) {
  cfg.validate();
  nv.validate();

  const auto transitions = transition_frequencies(nv);
  const double miss = std::min(std::abs(transitions.first - cfg.f_cavity),
                               std::abs(transitions.second - cfg.f_cavity));
  if (miss > ctx.resonance_tol) {
    throw std::invalid_argument(
        "sensing: cavity mode is " + std::to_string(miss) +
        " MHz off the nearest NV transition (tolerance " +
        std::to_string(ctx.resonance_tol) + ")");
  }

  SensingTrace trace;
  trace.tau_grid = cfg.tau_grid;
  trace.nv_rabi = sensing_nv_rabi(cfg, ctx);
  trace.nv_population = rabi_trace(trace.nv_rabi, 0.0, cfg.tau_grid, dec);
  if (trace.nv_rabi > 0.0) {
    trace.inferred_rabi = fit_rabi_frequency(trace.tau_grid, trace.nv_population).omega;
  }
  return trace;
}

// Inverts the linear chain Omega_NV(N). A flat trace estimates 0.
inline double estimate_concentration(const SensingTrace& trace, const SensingConfig& cfg,
                                     const SensingContext& ctx) {
  if (trace.inferred_rabi <= 0.0) return 0.0;
  SensingConfig unit = cfg;
  unit.n_targets = 1;
  const double slope = sensing_nv_rabi(unit, ctx);
  if (slope <= 0.0) {
    throw std::runtime_error("estimate_concentration: chain gain is zero");
  }
  return trace.inferred_rabi / slope;
}

// NV response (closed-form chain Rabi frequency) versus the target drive
// field; peaks where target_rabi(b) matches f_cavity.
inline std::vector<double> sweep_drive_field(const SensingConfig& cfg,
                                             const std::vector<double>& b_grid,
                                             const SensingContext& ctx) {
  std::vector<double> response;
  response.reserve(b_grid.size());
  SensingConfig swept = cfg;
  for (double b : b_grid) {
    swept.b_drive = b;
    response.push_back(sensing_nv_rabi(swept, ctx));
  }
  return response;
}

}  // namespace hybridsim
