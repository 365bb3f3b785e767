// Unit conventions used throughout: frequency MHz, magnetic field gauss,
// length micrometers (nanometers only where a field says so), time
// microseconds, power milliwatts, wave vector rad/um. Note that MHz and
// 1/us are the same unit, and um/us equals m/s, so group velocities and
// decay lengths come out in m/s and um without conversion factors.
#pragma once

#include <cmath>
#include <stdexcept>

namespace hybridsim {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// vacuum permeability, SI
inline constexpr double kMu0 = 4.0e-7 * kPi;

inline constexpr double kTeslaToGauss = 1.0e4;
inline constexpr double kMicrometerToMeter = 1.0e-6;
inline constexpr double kNanometerToMicrometer = 1.0e-3;
inline constexpr double kMilliwattToWatt = 1.0e-3;

// RMS-free peak current through a matched line: I = sqrt(P/Z), SI amperes.
inline double convert_power_to_current(double power_mw, double impedance_ohm) {
  if (power_mw < 0.0) {
    throw std::domain_error("convert_power_to_current: negative power");
  }
  if (impedance_ohm <= 0.0) {
    throw std::domain_error("convert_power_to_current: impedance must be positive");
  }
  return std::sqrt(power_mw * kMilliwattToWatt / impedance_ohm);
}

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace hybridsim
