// Microwave field at the nanodiamond through its two channels: the direct
// antenna near field (finite-width current sheet) and the stray field of
// the resonant propagating spin-wave mode, plus the amplification factor
// between them and its calibration.
#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "hybridsim/dynamics.hpp"
#include "hybridsim/magnonics.hpp"
#include "hybridsim/nv_spin.hpp"
#include "hybridsim/params.hpp"
#include "hybridsim/units.hpp"

namespace hybridsim {

enum class DriveChannel { kAntenna, kSpinWave };

struct DriveField {
  double amplitude = 0.0;  // gauss, transverse component at the ND
  DriveChannel channel = DriveChannel::kAntenna;
  std::optional<SWMode> contributing_mode;
};

// Thin-wire law mu0 I / (2 pi r), gauss. Used as the far-field limit of the
// strip formula.
inline double thin_wire_field(double current_amps, double r_um) {
  if (r_um <= 0.0) throw std::domain_error("thin_wire_field: r must be > 0");
  return kTeslaToGauss * kMu0 * current_amps / (kTwoPi * r_um * kMicrometerToMeter);
}

// |B| of an infinitely long current sheet of width w carrying current I,
// evaluated at lateral offset x and height z from the strip center (um).
// The two in-plane components are the atan difference across the strip and
// the log of the edge-distance ratio.
inline double strip_field(double current_amps, double width_um, double x_um,
                          double z_um) {
  const double half = 0.5 * width_um;
  if (z_um == 0.0 && std::abs(x_um) <= half) {
    throw std::domain_error("strip_field: point lies inside the conductor cross-section");
  }
  const double sheet = kMu0 * current_amps / (width_um * kMicrometerToMeter);  // mu0*K
  const double bx = -(sheet / kTwoPi) *
                    (std::atan2(half - x_um, z_um) + std::atan2(half + x_um, z_um));
  const double dp = (x_um + half) * (x_um + half) + z_um * z_um;
  const double dm = (x_um - half) * (x_um - half) + z_um * z_um;
  const double bz = (sheet / (2.0 * kTwoPi)) * std::log(dp / dm);
  return kTeslaToGauss * std::hypot(bx, bz);
}

// Antenna drive amplitude at the nanodiamond, gauss.
inline double antenna_field(const DriveConfig& drive, const DeviceGeometry& geometry) {
  drive.validate();
  geometry.validate();
  return strip_field(drive.current_amps(), geometry.msl_width, geometry.nd_x,
                     geometry.nd_z_um());
}

// Flat MSL response by default; rolloff_per_ghz > 0 adds an exponential
// high-frequency insertion loss.
inline double msl_response(double f_mhz, double rolloff_per_ghz) {
  return rolloff_per_ghz > 0.0 ? std::exp(-rolloff_per_ghz * f_mhz * 1.0e-3) : 1.0;
}

// Spin-wave stray-field amplitude at the ND for a drive at drive.frequency:
// the nearest ladder mode within the line-shape cutoff contributes
//   kappa_sw * sqrt(P) * eta(k) * stray(k, nd_z) * e^{-nd_x / L(k)} * shape
// and no resonant mode means amplitude 0 (not an error).
inline DriveField sw_drive_field(const DriveConfig& drive,
                                 const DeviceGeometry& geometry,
                                 const FieldConfig& field, const MaterialParams& params,
                                 const MagnonicsModel& model, double kappa_sw) {
  drive.validate();
  DriveField out;
  out.channel = DriveChannel::kSpinWave;

  const auto ladder = mode_ladder(field, params, geometry, model);
  const SWMode* best = nullptr;
  double best_dist = model.line_cutoff;
  for (const SWMode& m : ladder) {
    if (m.frequency <= 0.0) continue;
    const double dist = std::abs(m.frequency - drive.frequency);
    if (dist < best_dist) {
      best_dist = dist;
      best = &m;
    }
  }
  if (best == nullptr) return out;  // off band: zero amplitude

  const double shape = line_shape(drive.frequency - best->frequency, model.line_width,
                                  model.line_cutoff);
  const double stray = stray_field_profile(*best, geometry.nd_z, params);
  const double propagation = std::exp(-geometry.nd_x / best->decay_length);
  out.amplitude = kappa_sw * std::sqrt(drive.power) * best->efficiency * stray *
                  propagation * shape;
  out.contributing_mode = *best;
  return out;
}

// Anchor condition defining the spin-wave coupling scale: the matched NV
// transition between b_low and b_high, nd at x_ref, amplification = target.
struct CouplingCalibration {
  double x_ref = 20.0;      // um
  double b_low = 15.0;      // gauss
  double b_high = 145.0;    // gauss
  double f_seed = 2862.0;   // MHz
  double target = 100.0;    // amplification at x_ref
  double f_tol = 10.0;      // MHz between f_seed and achieved common frequency
};

// Solves for kappa_sw (gauss per sqrt(mW) at the source) such that
// amplification(x_ref) equals the calibration target.
inline double calibrate_kappa_sw(const MaterialParams& params,
                                 const DeviceGeometry& geometry,
                                 const FieldConfig& field_high,
                                 const MagnonicsModel& model,
                                 const CouplingCalibration& calib = {}) {
  const MatchedOrientation match =
      find_matching_orientation(calib.f_seed, calib.b_low, calib.b_high, params);

  DeviceGeometry geom_ref = geometry;
  geom_ref.nd_x = calib.x_ref;

  DriveConfig unit_drive;
  unit_drive.power = 1.0;
  unit_drive.frequency = match.f_common;

  FieldConfig high = field_high;
  high.b_ext = calib.b_high;

  const double b_ant = antenna_field(unit_drive, geom_ref);
  const DriveField sw =
      sw_drive_field(unit_drive, geom_ref, high, params, model, /*kappa_sw=*/1.0);
  if (sw.amplitude <= 0.0) {
    throw std::runtime_error(
        "calibrate_kappa_sw: no resonant spin-wave mode at the calibration anchor");
  }
  return calib.target * b_ant / sw.amplitude;
}

struct AmplificationResult {
  double ratio = 0.0;      // Omega_sw-per-sqrtP / Omega_antenna-per-sqrtP
  double f_common = 0.0;   // MHz, addressed transition frequency
  double theta_nv = 0.0;   // radians, matched orientation
  SWMode mode;             // resonant mode at (b_high, f_common)
  double b_antenna = 0.0;  // gauss per sqrt(mW) at nd_x
  double b_sw = 0.0;       // gauss per sqrt(mW) at nd_x
};

// Spin-wave over antenna drive ratio at position nd_x, with the addressed
// transition pinned by the matched orientation between b_low and b_high.
// Power-independent: both channels are linear in sqrt(P).
inline AmplificationResult amplification(double nd_x, double b_low, double b_high,
                                         double f_target, const MaterialParams& params,
                                         const DeviceGeometry& geometry,
                                         const FieldConfig& field_high,
                                         const MagnonicsModel& model, double kappa_sw,
                                         double f_tol = 10.0) {
  const MatchedOrientation match =
      find_matching_orientation(f_target, b_low, b_high, params);
  if (std::abs(match.f_common - f_target) > f_tol) {
    throw std::runtime_error(
        "amplification: matched transition lies " +
        std::to_string(std::abs(match.f_common - f_target)) +
        " MHz from the requested frequency");
  }

  DeviceGeometry geom = geometry;
  geom.nd_x = nd_x;

  DriveConfig unit_drive;
  unit_drive.power = 1.0;
  unit_drive.frequency = match.f_common;

  FieldConfig high = field_high;
  high.b_ext = b_high;

  AmplificationResult out;
  out.f_common = match.f_common;
  out.theta_nv = match.theta_nv;
  out.b_antenna = antenna_field(unit_drive, geom);
  const DriveField sw = sw_drive_field(unit_drive, geom, high, params, model, kappa_sw);
  if (!sw.contributing_mode.has_value() || sw.amplitude <= 0.0) {
    throw std::runtime_error(
        "amplification: no resonant spin-wave mode at (b_high, f); not applicable");
  }
  out.mode = *sw.contributing_mode;
  out.b_sw = sw.amplitude;
  out.ratio = out.b_sw / out.b_antenna;
  return out;
}

}  // namespace hybridsim
