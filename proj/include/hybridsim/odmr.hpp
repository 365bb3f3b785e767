// Optically detected magnetic resonance of an NV ensemble driven through
// the antenna and spin-wave channels: saturation-broadened resonance dips,
// the off-resonant quench pedestal from spin-wave noise, and full
// field-frequency contrast maps.
//
// A cell's contrast composes both photoluminescence channels under one
// bound:  contrast = c_max (1 - Q) + Q * dips,  with each member's
// branch-dip sum clamped at c_max, so contrast stays in [0, c_max].
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hybridsim/coupling.hpp"
#include "hybridsim/dynamics.hpp"
#include "hybridsim/magnonics.hpp"
#include "hybridsim/nv_spin.hpp"
#include "hybridsim/parallel.hpp"
#include "hybridsim/params.hpp"

namespace hybridsim {

// Saturation-broadened Lorentzian dip model:
//   c(Omega, delta) = c_max Omega^2 / (Omega^2 + Gamma^2 + delta^2 s)
struct OdmrModel {
  double contrast_max = 0.2;
  double linewidth = 8.0;   // Gamma, MHz
  double saturation = 1.0;  // s, dimensionless

  void validate() const {
    detail::require(contrast_max > 0.0 && contrast_max <= 1.0,
                    "odmr.contrast_max must be in (0, 1]");
    detail::require(linewidth > 0.0, "odmr.linewidth_mhz must be > 0");
    detail::require(saturation > 0.0, "odmr.saturation must be > 0");
  }
};

// T1 quench from broadband spin-wave noise: Q = 1 / (1 + c_q P rho) with
// rho the reach-weighted spectral density of modes within `bandwidth` of
// the drive, normalized so it is independent of the ladder discretization.
struct QuenchModel {
  double coefficient = 0.3;  // c_q, 1/mW
  double bandwidth = 50.0;   // MHz

  void validate() const {
    detail::require(coefficient >= 0.0, "quench.coefficient_per_mw must be >= 0");
    detail::require(bandwidth > 0.0, "quench.bandwidth_mhz must be > 0");
  }
};

namespace odmr_detail {

// Per-row resonance table: mode frequencies ascending, with the two weight
// flavors every cell query needs (drive amplitude per sqrt(mW), and quench
// reach), plus prefix sums of the latter for O(log n) window sums.
struct ModeTable {
  std::vector<double> freq;
  std::vector<double> drive_unit;  // eta * stray * e^{-x/L}
  std::vector<double> reach_prefix;  // integral of drive_unit over frequency

  static ModeTable build(const std::vector<SWMode>& ladder,
                         const DeviceGeometry& geometry, const MaterialParams& params) {
    struct Entry {
      double f, w;
    };
    std::vector<Entry> entries;
    entries.reserve(ladder.size());
    for (const SWMode& m : ladder) {
      if (m.frequency <= 0.0) continue;
      const double w = m.efficiency * stray_field_profile(m, geometry.nd_z, params) *
                       std::exp(-geometry.nd_x / m.decay_length);
      entries.push_back({m.frequency, w});
    }
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.f < b.f; });
    ModeTable t;
    t.freq.resize(entries.size());
    t.drive_unit.resize(entries.size());
    t.reach_prefix.resize(entries.size() + 1, 0.0);
    for (std::size_t i = 0; i < entries.size(); ++i) {
      t.freq[i] = entries[i].f;
      t.drive_unit[i] = entries[i].w;
      // each mode stands in for its local frequency interval, so the sum
      // approximates an integral and stays stable under k-grid refinement
      double df;
      if (entries.size() == 1) {
        df = 0.0;
      } else if (i + 1 < entries.size()) {
        df = entries[i + 1].f - entries[i].f;
      } else {
        df = entries[i].f - entries[i - 1].f;
      }
      t.reach_prefix[i + 1] = t.reach_prefix[i] + entries[i].w * df;
    }
    return t;
  }

  // reach-weighted spectral density within +-bw of f, normalized by the
  // window width
  double density(double f, double bw) const {
    const auto lo = std::lower_bound(freq.begin(), freq.end(), f - bw);
    const auto hi = std::upper_bound(freq.begin(), freq.end(), f + bw);
    return (reach_prefix[hi - freq.begin()] - reach_prefix[lo - freq.begin()]) /
           (2.0 * bw);
  }

  // drive amplitude per sqrt(mW) from the nearest mode within the cutoff
  double drive_amplitude_unit(double f, double kappa_sw, double width,
                              double cutoff) const {
    if (freq.empty()) return 0.0;
    const auto it = std::lower_bound(freq.begin(), freq.end(), f);
    double best = cutoff;
    std::size_t best_i = freq.size();
    if (it != freq.end() && std::abs(*it - f) < best) {
      best = std::abs(*it - f);
      best_i = it - freq.begin();
    }
    if (it != freq.begin() && std::abs(*(it - 1) - f) < best) {
      best = std::abs(*(it - 1) - f);
      best_i = (it - 1) - freq.begin();
    }
    if (best_i == freq.size()) return 0.0;
    return kappa_sw * drive_unit[best_i] *
           line_shape(f - freq[best_i], width, cutoff);
  }
};

// One ensemble member's dip contribution at drive frequency f, clamped so a
// single defect never exceeds the configured maximum contrast.
inline double member_dip(const std::pair<double, double>& transitions, double omega,
                         double f, const OdmrModel& model) {
  const double g2 = model.linewidth * model.linewidth;
  const double o2 = omega * omega;
  double acc = 0.0;
  for (double ft : {transitions.first, transitions.second}) {
    const double d = f - ft;
    acc += model.contrast_max * o2 / (o2 + g2 + d * d * model.saturation);
  }
  return std::min(acc, model.contrast_max);
}

}  // namespace odmr_detail

// Reach-weighted spin-wave mode density near the drive frequency.
inline double sw_noise_density(double f_mhz, const FieldConfig& field,
                               const MaterialParams& params,
                               const DeviceGeometry& geometry,
                               const MagnonicsModel& model, double bandwidth_mhz) {
  const auto table = odmr_detail::ModeTable::build(
      mode_ladder(field, params, geometry, model), geometry, params);
  return table.density(f_mhz, bandwidth_mhz);
}

// Q in (0, 1]; 1 exactly at zero power or with no modes near f.
inline double quench_factor(double f_mhz, const FieldConfig& field, double power_mw,
                            const MaterialParams& params,
                            const DeviceGeometry& geometry,
                            const MagnonicsModel& model, const QuenchModel& quench) {
  if (power_mw < 0.0) throw std::domain_error("quench_factor: power must be >= 0");
  quench.validate();
  if (power_mw == 0.0 || quench.coefficient == 0.0) return 1.0;
  const double rho =
      sw_noise_density(f_mhz, field, params, geometry, model, quench.bandwidth);
  return 1.0 / (1.0 + quench.coefficient * power_mw * rho);
}

// Ensemble ODMR spectrum for a fixed transverse drive amplitude at the ND.
// quench_of_f maps a drive frequency to its quench factor; pass
// [](double){ return 1.0; } for the unquenched spectrum.
template <typename QuenchFn>
std::vector<double> odmr_spectrum(const std::vector<double>& f_grid,
                                  const std::vector<double>& ensemble_thetas,
                                  const FieldConfig& field, const MaterialParams& params,
                                  double b_drive_at_nd, const OdmrModel& model,
                                  QuenchFn&& quench_of_f) {
  magnonics_detail::require_sorted_grid(f_grid, "f");
  model.validate();
  if (ensemble_thetas.empty()) {
    throw std::invalid_argument("odmr_spectrum: empty ensemble");
  }
  if (b_drive_at_nd < 0.0) {
    throw std::domain_error("odmr_spectrum: drive amplitude must be >= 0");
  }
  std::vector<std::pair<double, double>> transitions;
  transitions.reserve(ensemble_thetas.size());
  for (double th : ensemble_thetas) {
    transitions.push_back(
        transition_frequencies(NVConfig::from(params, th, field.b_ext)));
  }
  const double omega = rabi_frequency(b_drive_at_nd, params);
  std::vector<double> out;
  out.reserve(f_grid.size());
  for (double f : f_grid) {
    double dips = 0.0;
    for (const auto& tr : transitions) {
      dips += odmr_detail::member_dip(tr, omega, f, model);
    }
    dips /= static_cast<double>(transitions.size());
    const double q = quench_of_f(f);
    out.push_back(model.contrast_max * (1.0 - q) + q * dips);
  }
  return out;
}

inline std::vector<double> odmr_spectrum(const std::vector<double>& f_grid,
                                         const std::vector<double>& ensemble_thetas,
                                         const FieldConfig& field,
                                         const MaterialParams& params,
                                         double b_drive_at_nd, const OdmrModel& model) {
  return odmr_spectrum(f_grid, ensemble_thetas, field, params, b_drive_at_nd, model,
                       [](double) { return 1.0; });
}

struct ODMRMap {
  std::vector<double> b_grid;    // gauss
  std::vector<double> f_grid;    // MHz
  std::vector<double> contrast;  // row-major [b][f], in [0, contrast_max]

  double at(std::size_t bi, std::size_t fi) const {
    return contrast[bi * f_grid.size() + fi];
  }
};

// Full field-frequency contrast map. Per cell the drive amplitude combines
// the antenna near field with the resonant spin-wave stray field for the
// row's bias field; the quench pedestal uses the same mode reach.
inline ODMRMap odmr_map(const std::vector<double>& b_grid,
                        const std::vector<double>& f_grid,
                        const std::vector<double>& ensemble_thetas,
                        const FieldConfig& field_template, const DriveConfig& drive,
                        const MaterialParams& params, const DeviceGeometry& geometry,
                        const MagnonicsModel& mag_model, const OdmrModel& odmr_model,
                        const QuenchModel& quench_model, double kappa_sw,
                        double msl_rolloff_per_ghz = 0.0, int threads = 0) {
  magnonics_detail::require_sorted_grid(b_grid, "b");
  magnonics_detail::require_sorted_grid(f_grid, "f");
  odmr_model.validate();
  quench_model.validate();
  if (ensemble_thetas.empty()) throw std::invalid_argument("odmr_map: empty ensemble");

  ODMRMap map;
  map.b_grid = b_grid;
  map.f_grid = f_grid;
  map.contrast.assign(b_grid.size() * f_grid.size(), 0.0);

  const double b_ant = drive.power > 0.0 ? antenna_field(drive, geometry) : 0.0;
  const double sqrt_p = std::sqrt(drive.power);

  parallel_for(b_grid.size(), threads, [&](std::size_t bi) {
    FieldConfig field = field_template;
    field.b_ext = b_grid[bi];

    std::vector<std::pair<double, double>> transitions;
    transitions.reserve(ensemble_thetas.size());
    for (double th : ensemble_thetas) {
      transitions.push_back(
          transition_frequencies(NVConfig::from(params, th, field.b_ext)));
    }
    const auto table = odmr_detail::ModeTable::build(
        mode_ladder(field, params, geometry, mag_model), geometry, params);

    double* row = map.contrast.data() + bi * f_grid.size();
    for (std::size_t fi = 0; fi < f_grid.size(); ++fi) {
      const double f = f_grid[fi];
      const double b_sw = sqrt_p * table.drive_amplitude_unit(
                                       f, kappa_sw, mag_model.line_width,
                                       mag_model.line_cutoff);
      const double b_total = (b_ant + b_sw) * msl_response(f, msl_rolloff_per_ghz);
      const double omega = rabi_frequency(b_total, params);

      double dips = 0.0;
      for (const auto& tr : transitions) {
        dips += odmr_detail::member_dip(tr, omega, f, odmr_model);
      }
      dips /= static_cast<double>(transitions.size());

      double q = 1.0;
      if (drive.power > 0.0 && quench_model.coefficient > 0.0) {
        const double rho = table.density(f, quench_model.bandwidth);
        q = 1.0 / (1.0 + quench_model.coefficient * drive.power * rho);
      }
      row[fi] = odmr_model.contrast_max * (1.0 - q) + q * dips;
    }
  });
  return map;
}

}  // namespace hybridsim
