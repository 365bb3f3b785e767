// Magnetostatic spin-wave physics for an in-plane magnetized thin film:
// dispersion relations, group velocity, propagation decay, antenna
// excitation efficiency, stray-field reach, the discrete mode ladder and
// the two-antenna transmission map.
//
// Mode families by bias-field angle theta (relative to the antenna axis):
//   theta = 0, pi  -> surface modes (DESW), frequency increasing with k
//   theta = pi/2   -> lowest backward-volume branch (BVMSW), decreasing
//
// Zero bias field is the reference / ferromagnet-disabled state: mode
// frequencies are defined as 0 and the modes take no part in any sum.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hybridsim/parallel.hpp"
#include "hybridsim/params.hpp"
#include "hybridsim/units.hpp"

namespace hybridsim {

enum class ModeKind { kDesw, kBvmsw };

// Which film surface the mode amplitude lives on, as seen from the
// antenna/nanodiamond side.
enum class SurfaceSide { kNear, kFar };

struct SWMode {
  double k = 0.0;            // rad/um
  double frequency = 0.0;    // MHz
  ModeKind kind = ModeKind::kDesw;
  double group_velocity = 0.0;  // m/s, signed (negative for BVMSW)
  double decay_length = 0.0;    // um
  double efficiency = 0.0;      // dimensionless, in [0, 1]
  SurfaceSide surface_side = SurfaceSide::kNear;
};

// k-grid, line shape and nonreciprocity knobs shared by the ladder-based
// operations. k_max <= 0 selects the default 10/thickness.
struct MagnonicsModel {
  double k_min = 0.0;          // rad/um, used by band_edges
  double k_max = 0.0;          // rad/um, 0 -> 10/thickness
  double k_spacing = 0.05;     // rad/um ladder quantization
  double rho_nr = 0.05;        // theta = pi excitation-efficiency factor
  double line_width = 5.0;     // MHz, Lorentzian half width
  double line_cutoff = 15.0;   // MHz, hard support cutoff
  double vg_rel_step = 1.0e-6; // relative step of the group-velocity stencil
  bool ferromagnet_enabled = true;

  double resolved_k_max(const MaterialParams& p) const {
    return k_max > 0.0 ? k_max : 10.0 / p.thickness;
  }

  void validate() const {
    detail::require(k_min >= 0.0, "model.k_min_rad_per_um must be >= 0");
    detail::require(k_spacing > 0.0, "model.k_spacing_rad_per_um must be > 0");
    detail::require(rho_nr > 0.0 && rho_nr < 1.0, "model.rho_nr must be in (0, 1)");
    detail::require(line_width > 0.0, "model.line_width_mhz must be > 0");
    detail::require(line_cutoff >= line_width,
                    "model.line_cutoff_mhz must be >= model.line_width_mhz");
    detail::require(vg_rel_step > 0.0, "model.vg_rel_step must be > 0");
  }
};

namespace magnonics_detail {

inline bool is_surface_angle(double theta) {
  return std::abs(theta) < 1e-9 || std::abs(theta - kPi) < 1e-9;
}

inline bool is_volume_angle(double theta) {
  return std::abs(theta - kPi / 2.0) < 1e-9;
}

// DESW surface branch: f^2 = fH (fH + fM) + (fM^2/4) (1 - e^{-2kd})
inline double desw_raw(double k, double f_h, double f_m, double d) {
  const double c = 0.25 * f_m * f_m;
  return std::sqrt(f_h * (f_h + f_m) + c * (1.0 - std::exp(-2.0 * k * d)));
}

// Lowest BVMSW branch: f^2 = fH (fH + fM (1 - e^{-kd}) / (kd))
inline double bvmsw_raw(double k, double f_h, double f_m, double d) {
  const double u = k * d;
  // (1 - e^{-u})/u -> 1 as u -> 0; series below keeps the limit smooth.
  const double g = u < 1e-6 ? 1.0 - 0.5 * u + u * u / 6.0 : (1.0 - std::exp(-u)) / u;
  return std::sqrt(f_h * (f_h + f_m * g));
}

inline double dispersion_raw(ModeKind kind, double k, double f_h, double f_m, double d) {
  return kind == ModeKind::kDesw ? desw_raw(k, f_h, f_m, d) : bvmsw_raw(k, f_h, f_m, d);
}

// f^2(k+h) - f^2(k-h) with the k-independent part cancelled analytically,
// so the central difference keeps full precision even where the branch is
// ten orders of magnitude flatter than the frequency itself.
inline double dispersion_sq_delta(ModeKind kind, double k, double h, double f_h,
                                  double f_m, double d) {
  if (kind == ModeKind::kDesw) {
    const double c = 0.25 * f_m * f_m;
    return c * std::exp(-2.0 * k * d) * (std::exp(2.0 * h * d) - std::exp(-2.0 * h * d));
  }
  auto g = [](double u) {
    return u < 1e-6 ? 1.0 - 0.5 * u + u * u / 6.0 : (1.0 - std::exp(-u)) / u;
  };
  return f_h * f_m * (g((k + h) * d) - g((k - h) * d));
}

}  // namespace magnonics_detail

inline ModeKind mode_kind_for_theta(double theta) {
  if (magnonics_detail::is_surface_angle(theta)) return ModeKind::kDesw;
  if (magnonics_detail::is_volume_angle(theta)) return ModeKind::kBvmsw;
  throw std::invalid_argument(
      "unsupported field angle: theta must be one of {0, pi/2, pi}");
}

inline SurfaceSide surface_side_for_theta(double theta) {
  // Reversing the field moves the surface mode to the far film surface.
  return std::abs(theta - kPi) < 1e-9 ? SurfaceSide::kFar : SurfaceSide::kNear;
}

// Surface-mode frequency, MHz. Limits: k -> 0 gives the Kittel value
// sqrt(fH (fH + fM)); k -> inf gives fH + fM/2.
inline double desw_frequency(double k, const FieldConfig& field,
                             const MaterialParams& params) {
  if (k < 0.0) throw std::domain_error("desw_frequency: k must be >= 0");
  if (!magnonics_detail::is_surface_angle(field.theta)) {
    throw std::invalid_argument(
        "desw_frequency: surface modes require theta in {0, pi} "
        "(theta = pi/2 excites the backward-volume family)");
  }
  if (field.b_ext == 0.0) return 0.0;
  return magnonics_detail::desw_raw(k, params.field_frequency(field.b_ext),
                                    params.magnetization_frequency(),
                                    params.thickness);
}

// Backward-volume frequency, MHz, monotonically decreasing in k from the
// Kittel value down to fH.
inline double bvmsw_frequency(double k, const FieldConfig& field,
                              const MaterialParams& params) {
  if (k < 0.0) throw std::domain_error("bvmsw_frequency: k must be >= 0");
  if (!magnonics_detail::is_volume_angle(field.theta)) {
    throw std::invalid_argument(
        "bvmsw_frequency: volume modes require theta = pi/2");
  }
  if (field.b_ext == 0.0) return 0.0;
  return magnonics_detail::bvmsw_raw(k, params.field_frequency(field.b_ext),
                                     params.magnetization_frequency(),
                                     params.thickness);
}

inline double dispersion_frequency(ModeKind kind, double k, const FieldConfig& field,
                                   const MaterialParams& params) {
  if (k < 0.0) throw std::domain_error("dispersion_frequency: k must be >= 0");
  if (field.b_ext == 0.0) return 0.0;
  return magnonics_detail::dispersion_raw(kind, k, params.field_frequency(field.b_ext),
                                          params.magnetization_frequency(),
                                          params.thickness);
}

// d(omega)/dk of the angular dispersion omega = 2*pi*f, central finite
// difference (f(k+h) - f(k-h)) / 2h evaluated through the squared
// dispersion: delta_f = delta(f^2) / (f(k+h) + f(k-h)). With f in MHz and
// k in rad/um the result is um/us = m/s. Positive for DESW, negative for
// BVMSW.
inline double group_velocity(ModeKind kind, double k, const FieldConfig& field,
                             const MaterialParams& params, double rel_step = 1.0e-6) {
  if (k <= 0.0) {
    throw std::domain_error("group_velocity: k must be > 0 (boundary at k = 0)");
  }
  if (field.b_ext == 0.0) return 0.0;
  const double f_h = params.field_frequency(field.b_ext);
  const double f_m = params.magnetization_frequency();
  const double d = params.thickness;
  const double h = std::min(rel_step * (k + 1.0 / d), 0.5 * k);
  const double fp = magnonics_detail::dispersion_raw(kind, k + h, f_h, f_m, d);
  const double fm = magnonics_detail::dispersion_raw(kind, k - h, f_h, f_m, d);
  const double dsq = magnonics_detail::dispersion_sq_delta(kind, k, h, f_h, f_m, d);
  return kTwoPi * dsq / ((fp + fm) * 2.0 * h);
}

// Propagation decay length L = |v_g| * tau with amplitude lifetime
// tau = 1 / (alpha * omega), micrometers.
inline double decay_length(ModeKind kind, double k, const FieldConfig& field,
                           const MaterialParams& params, double rel_step = 1.0e-6) {
  if (k <= 0.0) throw std::domain_error("decay_length: k must be > 0");
  if (field.b_ext == 0.0) return std::numeric_limits<double>::infinity();
  const double f = dispersion_frequency(kind, k, field, params);
  const double v = std::abs(group_velocity(kind, k, field, params, rel_step));
  const double tau = 1.0 / (params.alpha_gilbert * kTwoPi * f);  // us
  return v * tau;  // um/us * us
}

// Antenna k-filter |sinc(k w / 2)|, scaled by the nonreciprocity factor
// when the field is reversed (theta = pi).
inline double excitation_efficiency(double k, const DeviceGeometry& geometry,
                                    const FieldConfig& field, double rho_nr = 0.05) {
  if (k < 0.0) throw std::domain_error("excitation_efficiency: k must be >= 0");
  const double a = 0.5 * k * geometry.msl_width;
  const double eta0 = a == 0.0 ? 1.0 : std::abs(std::sin(a) / a);
  const bool reversed = std::abs(field.theta - kPi) < 1e-9;
  return reversed ? rho_nr * eta0 : eta0;
}

// Relative stray-field amplitude a height z (nanometers) above the film
// surface: e^{-k z}, with an extra e^{-k d} when the mode lives on the far
// surface and its field has to cross the film first.
inline double stray_field_profile(const SWMode& mode, double z_nm,
                                  const MaterialParams& params) {
  if (z_nm < 0.0) throw std::domain_error("stray_field_profile: z must be >= 0");
  const double z_um = z_nm * kNanometerToMicrometer;
  double a = std::exp(-mode.k * z_um);
  if (mode.surface_side == SurfaceSide::kFar) {
    a *= std::exp(-mode.k * params.thickness);
  }
  return a;
}

// (f_min, f_max) of the dispersion over k in [k_min, k_max].
inline std::pair<double, double> band_edges(const FieldConfig& field,
                                            const MaterialParams& params,
                                            double k_max, double k_min = 0.0) {
  if (k_max <= 0.0) throw std::invalid_argument("band_edges: k_max must be > 0");
  if (k_min < 0.0 || k_min > k_max) {
    throw std::invalid_argument("band_edges: need 0 <= k_min <= k_max");
  }
  const ModeKind kind = mode_kind_for_theta(field.theta);
  const double f_lo_k = dispersion_frequency(kind, k_min, field, params);
  const double f_hi_k = dispersion_frequency(kind, k_max, field, params);
  return std::minmax(f_lo_k, f_hi_k);
}

// Uniformly k-quantized ladder k_n = n * k_spacing, n = 1..N, each mode
// fully populated. Returns an empty list when k_max < k_spacing.
inline std::vector<SWMode> mode_ladder(const FieldConfig& field,
                                       const MaterialParams& params,
                                       const DeviceGeometry& geometry,
                                       const MagnonicsModel& model) {
  const ModeKind kind = mode_kind_for_theta(field.theta);
  const SurfaceSide side = surface_side_for_theta(field.theta);
  const double k_max = model.resolved_k_max(params);
  const int n_modes = static_cast<int>(std::floor(k_max / model.k_spacing + 1e-9));
  std::vector<SWMode> ladder;
  if (n_modes <= 0) return ladder;
  ladder.reserve(static_cast<std::size_t>(n_modes));
  const bool inert = field.b_ext == 0.0 || !model.ferromagnet_enabled;
  for (int n = 1; n <= n_modes; ++n) {
    SWMode m;
    m.k = n * model.k_spacing;
    m.kind = kind;
    m.surface_side = side;
    m.efficiency = excitation_efficiency(m.k, geometry, field, model.rho_nr);
    if (inert) {
      m.frequency = 0.0;
      m.group_velocity = 0.0;
      m.decay_length = std::numeric_limits<double>::infinity();
    } else {
      m.frequency = dispersion_frequency(kind, m.k, field, params);
      m.group_velocity = group_velocity(kind, m.k, field, params, model.vg_rel_step);
      m.decay_length = decay_length(kind, m.k, field, params, model.vg_rel_step);
    }
    ladder.push_back(m);
  }
  return ladder;
}

// Unit-peak line shape with compact support: a Lorentzian of half width
// `width`, shifted and rescaled so it reaches exactly 0 at |delta| =
// `cutoff` and stays 0 beyond. Continuous everywhere.
inline double line_shape(double delta, double width, double cutoff) {
  const double a = std::abs(delta);
  if (a >= cutoff) return 0.0;
  const double raw = 1.0 / (1.0 + (delta / width) * (delta / width));
  const double floor = 1.0 / (1.0 + (cutoff / width) * (cutoff / width));
  return (raw - floor) / (1.0 - floor);
}

struct TransmissionMap {
  std::vector<double> b_grid;  // gauss
  std::vector<double> f_grid;  // MHz
  // row-major [b][f], dimensionless transmitted amplitude, zero-field
  // referenced
  std::vector<double> s21;

  double at(std::size_t bi, std::size_t fi) const {
    return s21[bi * f_grid.size() + fi];
  }
};

namespace magnonics_detail {

inline void require_sorted_grid(const std::vector<double>& g, const char* name) {
  if (g.empty()) throw std::invalid_argument(std::string(name) + " grid is empty");
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) {
      throw std::invalid_argument(std::string(name) + " grid has non-finite entries");
    }
    if (i > 0 && g[i] <= g[i - 1]) {
      throw std::invalid_argument(std::string(name) +
                                  " grid must be strictly increasing");
    }
  }
}

struct SpectralLine {
  double f;
  double weight;
};

// Spectral lines of one field row. The base ladder k_n = n * k_spacing is
// refined inside each interval until adjacent line spacing in frequency
// drops below the line width, so the band has no artificial holes at any
// map resolution; sub-line weights carry the interval fraction, keeping
// the summed band amplitude stable under refinement. The first and last
// lines sit exactly at k_spacing and N * k_spacing, which is what keeps
// the map support aligned with band_edges over the same k range.
inline std::vector<SpectralLine> transmission_lines(const FieldConfig& field,
                                                    const MaterialParams& params,
                                                    const DeviceGeometry& geometry,
                                                    const MagnonicsModel& model) {
  std::vector<SpectralLine> lines;
  if (field.b_ext == 0.0 || !model.ferromagnet_enabled) return lines;
  const ModeKind kind = mode_kind_for_theta(field.theta);
  const double k_max = model.resolved_k_max(params);
  const int n_modes = static_cast<int>(std::floor(k_max / model.k_spacing + 1e-9));
  if (n_modes < 1) return lines;

  auto freq = [&](double k) { return dispersion_frequency(kind, k, field, params); };
  auto weight = [&](double k) {
    const double eta = excitation_efficiency(k, geometry, field, model.rho_nr);
    const double L = decay_length(kind, k, field, params, model.vg_rel_step);
    return eta * eta * std::exp(-geometry.msl_separation / L);
  };

  for (int n = 1; n < n_modes; ++n) {
    const double k_lo = n * model.k_spacing;
    const double k_hi = (n + 1) * model.k_spacing;
    const double df = std::abs(freq(k_hi) - freq(k_lo));
    const int m = std::max(1, static_cast<int>(std::ceil(df / model.line_width)));
    for (int j = 0; j < m; ++j) {
      const double k = k_lo + (k_hi - k_lo) * j / m;
      lines.push_back({freq(k), weight(k) / m});
    }
  }
  const double k_last = n_modes * model.k_spacing;
  lines.push_back({freq(k_last), weight(k_last)});

  std::sort(lines.begin(), lines.end(),
            [](const SpectralLine& a, const SpectralLine& b) { return a.f < b.f; });
  return lines;
}

// One raw transmission row: sum over spectral lines of
//   weight * line_shape(f - f_line), window-searched per cell; summation
// order inside a cell is fixed (ascending frequency) for bit
// reproducibility.
inline void transmission_row(const std::vector<SpectralLine>& lines,
                             const std::vector<double>& f_grid, double width,
                             double cutoff, double* out) {
  std::vector<double> freqs(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) freqs[i] = lines[i].f;
  for (std::size_t fi = 0; fi < f_grid.size(); ++fi) {
    const double f = f_grid[fi];
    double acc = 0.0;
    auto lo = std::lower_bound(freqs.begin(), freqs.end(), f - cutoff);
    auto hi = std::upper_bound(freqs.begin(), freqs.end(), f + cutoff);
    for (auto it = lo; it != hi; ++it) {
      const std::size_t i = static_cast<std::size_t>(it - freqs.begin());
      acc += lines[i].weight * line_shape(f - lines[i].f, width, cutoff);
    }
    out[fi] = acc;
  }
}

}  // namespace magnonics_detail

// Two-antenna transmission amplitude over a (B, f) grid with the zero-field
// map subtracted, mirroring a field-referenced S21 measurement.
inline TransmissionMap transmission_map(const std::vector<double>& b_grid,
                                        const std::vector<double>& f_grid,
                                        const DeviceGeometry& geometry,
                                        const MaterialParams& params,
                                        const FieldConfig& field_template,
                                        const MagnonicsModel& model,
                                        int threads = 0) {
  magnonics_detail::require_sorted_grid(b_grid, "b");
  magnonics_detail::require_sorted_grid(f_grid, "f");
  if (b_grid.front() < 0.0) throw std::invalid_argument("b grid must be >= 0");

  TransmissionMap map;
  map.b_grid = b_grid;
  map.f_grid = f_grid;
  map.s21.assign(b_grid.size() * f_grid.size(), 0.0);

  // Zero-field reference row (identically zero under the inert-mode
  // convention, but computed through the same path it is subtracted from).
  FieldConfig ref = field_template;
  ref.b_ext = 0.0;
  std::vector<double> ref_row(f_grid.size(), 0.0);
  magnonics_detail::transmission_row(
      magnonics_detail::transmission_lines(ref, params, geometry, model), f_grid,
      model.line_width, model.line_cutoff, ref_row.data());

  parallel_for(b_grid.size(), threads, [&](std::size_t bi) {
    FieldConfig field = field_template;
    field.b_ext = b_grid[bi];
    const auto lines = magnonics_detail::transmission_lines(field, params, geometry, model);
    double* row = map.s21.data() + bi * f_grid.size();
    magnonics_detail::transmission_row(lines, f_grid, model.line_width,
                                       model.line_cutoff, row);
    for (std::size_t fi = 0; fi < f_grid.size(); ++fi) {
      row[fi] = std::max(0.0, row[fi] - ref_row[fi]);
    }
  });
  return map;
}

}  // namespace hybridsim
