// Parameter containers shared by all modules. Everything is validated on
// construction and immutable afterwards; instances are safe to share
// across worker threads.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "hybridsim/units.hpp"

namespace hybridsim {

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

inline void require_finite(double v, const std::string& name) {
  require(std::isfinite(v), name + " must be finite");
}

}  // namespace detail

// Magnetic film and NV constants.
//   gamma_m        film gyromagnetic ratio, MHz/gauss
//   four_pi_ms     saturation magnetization 4*pi*Ms, gauss
//   thickness      film thickness, micrometers
//   alpha_gilbert  dimensionless Gilbert damping
//   gamma_e        electron/NV gyromagnetic ratio, MHz/gauss
//   d_zfs          NV zero-field splitting, MHz
struct MaterialParams {
  double gamma_m = 2.80;
  double four_pi_ms = 1780.0;
  double thickness = 3.08;
  double alpha_gilbert = 1.0e-4;
  double gamma_e = 2.8024;
  double d_zfs = 2870.0;
  // Set to accept a d_zfs outside the standard [2800, 2900] MHz window.
  bool allow_nonstandard_zfs = false;

  void validate() const {
    using detail::require;
    require(gamma_m > 0.0, "material.gamma_m_mhz_per_g must be > 0");
    require(four_pi_ms > 0.0, "material.four_pi_ms_g must be > 0");
    require(thickness > 0.0, "material.thickness_um must be > 0");
    require(alpha_gilbert > 0.0 && alpha_gilbert < 0.1,
            "material.alpha_gilbert must be in (0, 0.1)");
    require(gamma_e > 0.0, "material.gamma_e_mhz_per_g must be > 0");
    require(d_zfs > 0.0, "material.d_zfs_mhz must be > 0");
    if (!allow_nonstandard_zfs) {
      require(d_zfs >= 2800.0 && d_zfs <= 2900.0,
              "material.d_zfs_mhz outside [2800, 2900]; set "
              "material.allow_nonstandard_zfs to override");
    }
    for (double v : {gamma_m, four_pi_ms, thickness, alpha_gilbert, gamma_e, d_zfs}) {
      detail::require_finite(v, "material parameter");
    }
  }

  // f_H = gamma_m * B, the field term of the magnetostatic dispersions, MHz.
  double field_frequency(double b_gauss) const { return gamma_m * b_gauss; }
  // f_M = gamma_m * 4*pi*Ms, MHz.
  double magnetization_frequency() const { return gamma_m * four_pi_ms; }
};

inline MaterialParams default_params() {
  MaterialParams p;
  p.validate();
  return p;
}

// Antenna strips and nanodiamond placement.
//   msl_width       strip width, micrometers
//   msl_separation  distance between the two antennas, micrometers
//   nd_x            lateral ND distance from the driving antenna, micrometers
//   nd_z            ND standoff above the film surface, nanometers
struct DeviceGeometry {
  double msl_width = 5.0;
  double msl_separation = 100.0;
  double nd_x = 20.0;
  double nd_z = 50.0;

  void validate() const {
    using detail::require;
    require(msl_width > 0.0, "geometry.msl_width_um must be > 0");
    require(msl_separation > msl_width,
            "geometry.msl_separation_um must exceed geometry.msl_width_um");
    require(nd_x >= 0.0, "geometry.nd_x_um must be >= 0");
    require(nd_z >= 0.0, "geometry.nd_z_nm must be >= 0");
    for (double v : {msl_width, msl_separation, nd_x, nd_z}) {
      detail::require_finite(v, "geometry parameter");
    }
  }

  double nd_z_um() const { return nd_z * kNanometerToMicrometer; }
};

// Bias field: magnitude and in-plane angle theta between the field and the
// antenna axis. theta = 0 and pi select surface modes, pi/2 volume modes.
struct FieldConfig {
  double b_ext = 145.0;
  double theta = 0.0;

  void validate() const {
    using detail::require;
    require(b_ext >= 0.0, "field.b_gauss must be >= 0");
    require(theta >= 0.0 && theta < kTwoPi, "field.theta_rad must be in [0, 2*pi)");
    detail::require_finite(b_ext, "field.b_gauss");
    detail::require_finite(theta, "field.theta_rad");
  }
};

// Microwave drive at the antenna.
struct DriveConfig {
  double power = 1.0e-3;      // milliwatts
  double frequency = 2862.0;  // MHz
  double impedance = 50.0;    // ohms

  void validate() const {
    using detail::require;
    require(power >= 0.0, "drive.power_mw must be >= 0");
    require(frequency > 0.0, "drive.frequency_mhz must be > 0");
    require(impedance > 0.0, "drive.impedance_ohm must be > 0");
    for (double v : {power, frequency, impedance}) {
      detail::require_finite(v, "drive parameter");
    }
  }

  double current_amps() const { return convert_power_to_current(power, impedance); }
};

}  // namespace hybridsim
