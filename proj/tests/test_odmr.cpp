#include <catch2/catch_amalgamated.hpp>
#include <algorithm>
#include <cmath>

#include "hybridsim/odmr.hpp"
#include "test_support.hpp"

using namespace hybridsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const MaterialParams& params() {
  static const MaterialParams p = default_params();
  return p;
}

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(lo + (hi - lo) * i / (n - 1));
  return g;
}

DeviceGeometry nd_at_40um() {
  DeviceGeometry g;
  g.nd_x = 40.0;
  return g;
}

}  // namespace

TEST_CASE("odmr spectrum: no drive, degenerate zero-field dip") {
  const OdmrModel model;
  const auto f_grid = grid(2700.0, 3040.0, 341);
  const std::vector<double> thetas = {0.2, 0.9, 1.4};

  const auto dark =
      odmr_spectrum(f_grid, thetas, FieldConfig{145.0, 0.0}, params(), 0.0, model);
  for (double c : dark) REQUIRE(c == 0.0);

  // B = 0: both branches of every member collapse onto one dip at D
  const auto zero_field =
      odmr_spectrum(f_grid, thetas, FieldConfig{0.0, 0.0}, params(), 30.0, model);
  const auto it = std::max_element(zero_field.begin(), zero_field.end());
  CHECK_THAT(f_grid[it - zero_field.begin()], WithinAbs(2870.0, 1.0));
  CHECK(*it > 0.9 * model.contrast_max);  // strong drive saturates the dip
  // away from resonance the spectrum is flat
  CHECK(zero_field.front() < 0.05 * model.contrast_max);
  CHECK(zero_field.back() < 0.05 * model.contrast_max);
}

TEST_CASE("odmr spectrum invariances") {
  const OdmrModel model;
  const auto f_grid = grid(2700.0, 3040.0, 101);
  std::vector<double> thetas = {0.1, 0.5, 0.8, 1.2, 1.5};

  const auto base =
      odmr_spectrum(f_grid, thetas, FieldConfig{120.0, 0.0}, params(), 2.0, model);
  std::reverse(thetas.begin(), thetas.end());
  const auto shuffled =
      odmr_spectrum(f_grid, thetas, FieldConfig{120.0, 0.0}, params(), 2.0, model);
  CHECK(base == shuffled);

  // contrast never exceeds the configured maximum
  for (double c : base) {
    REQUIRE(c >= 0.0);
    REQUIRE(c <= model.contrast_max + 1e-15);
  }
}

TEST_CASE("quench factor basics") {
  const MagnonicsModel mag;
  const QuenchModel quench;
  const auto g = nd_at_40um();

  CHECK(quench_factor(2862.0, FieldConfig{145.0, 0.0}, 0.0, params(), g, mag, quench) ==
        1.0);
  CHECK(quench_factor(2870.0, FieldConfig{0.0, 0.0}, 4.0, params(), g, mag, quench) ==
        1.0);

  // inside the band: more power, lower Q
  const double q_low =
      quench_factor(2600.0, FieldConfig{145.0, 0.0}, 0.04, params(), g, mag, quench);
  const double q_high =
      quench_factor(2600.0, FieldConfig{145.0, 0.0}, 4.0, params(), g, mag, quench);
  CHECK(q_high < q_low);
  CHECK(q_low <= 1.0);
  CHECK(q_high > 0.0);

  // monotone non-increasing in power
  double prev = 1.0;
  for (double p : {0.0, 1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
    const double q =
        quench_factor(2600.0, FieldConfig{145.0, 0.0}, p, params(), g, mag, quench);
    REQUIRE(q <= prev + 1e-15);
    prev = q;
  }

  // far from any mode: no quench at all
  CHECK(quench_factor(4000.0, FieldConfig{145.0, 0.0}, 4.0, params(), g, mag, quench) ==
        1.0);
}

TEST_CASE("quench density is stable under ladder refinement") {
  const auto g = nd_at_40um();
  MagnonicsModel coarse;
  coarse.k_spacing = 0.01;
  MagnonicsModel fine;
  fine.k_spacing = 0.002;
  const double rho_c =
      sw_noise_density(2600.0, FieldConfig{145.0, 0.0}, params(), g, coarse, 50.0);
  const double rho_f =
      sw_noise_density(2600.0, FieldConfig{145.0, 0.0}, params(), g, fine, 50.0);
  CHECK_THAT(rho_c, WithinRel(rho_f, 0.05));
}

TEST_CASE("odmr map: spin-wave driven features live inside the band") {
  MagnonicsModel mag;
  mag.k_spacing = 0.005;
  const OdmrModel odmr;
  const QuenchModel quench;
  const auto g = nd_at_40um();
  DriveConfig drive;
  drive.power = 0.04;

  const FieldConfig field_template{145.0, 0.0};
  const double kappa =
      calibrate_kappa_sw(params(), g, field_template, mag);

  // include a member matched to ~2862 MHz at 145 G
  const auto match = find_matching_orientation(2862.0, 15.0, 145.0, params());
  const std::vector<double> thetas = {0.0, 0.6, match.theta_nv};

  const auto b_grid = grid(10.0, 250.0, 25);
  const auto f_grid = grid(2200.0, 3100.0, 226);
  const auto map = odmr_map(b_grid, f_grid, thetas, field_template, drive, params(), g,
                            mag, odmr, quench, kappa);

  // the matched member produces a dip near 2862 at 145 G
  std::size_t bi145 = 0;
  for (std::size_t i = 0; i < b_grid.size(); ++i) {
    if (std::abs(b_grid[i] - 145.0) < 5.1) bi145 = i;
  }
  double near_2862 = 0.0;
  for (std::size_t fi = 0; fi < f_grid.size(); ++fi) {
    if (std::abs(f_grid[fi] - 2862.0) <= 10.0) {
      near_2862 = std::max(near_2862, map.at(bi145, fi));
    }
  }
  CHECK(near_2862 > 0.02);

  // strong cells require a ladder mode within the line cutoff: without
  // spin waves the same drive yields only the (tiny) antenna dips
  MagnonicsModel disabled = mag;
  disabled.ferromagnet_enabled = false;
  const auto antenna_only = odmr_map(b_grid, f_grid, thetas, field_template, drive,
                                     params(), g, disabled, odmr, quench, kappa);
  for (std::size_t bi = 0; bi < b_grid.size(); ++bi) {
    FieldConfig field = field_template;
    field.b_ext = b_grid[bi];
    const auto ladder = mode_ladder(field, params(), g, mag);
    for (std::size_t fi = 0; fi < f_grid.size(); ++fi) {
      const double sw_part = map.at(bi, fi) - antenna_only.at(bi, fi);
      if (sw_part > 0.005) {
        bool mode_near = false;
        for (const auto& m : ladder) {
          if (std::abs(m.frequency - f_grid[fi]) < mag.line_cutoff + quench.bandwidth) {
            mode_near = true;
            break;
          }
        }
        REQUIRE(mode_near);
      }
    }
  }

  // dips above the band top are absent: the perpendicular branch at high
  // field lies above every mode, so only antenna-level contrast remains
  FieldConfig f145 = field_template;
  const auto edges = band_edges(f145, params(), mag.resolved_k_max(params()));
  for (std::size_t fi = 0; fi < f_grid.size(); ++fi) {
    if (f_grid[fi] > edges.second + quench.bandwidth) {
      REQUIRE(map.at(bi145, fi) <= antenna_only.at(bi145, fi) + 1e-12);
    }
  }
}

TEST_CASE("odmr map determinism across worker counts") {
  MagnonicsModel mag;
  mag.k_spacing = 0.01;
  const auto g = nd_at_40um();
  DriveConfig drive;
  drive.power = 4.0;
  const auto thetas = ensemble_orientations(16, 42);
  const auto b_grid = grid(0.0, 250.0, 26);
  const auto f_grid = grid(2200.0, 3100.0, 91);

  const auto m1 = odmr_map(b_grid, f_grid, thetas, FieldConfig{145.0, 0.0}, drive,
                           params(), g, mag, OdmrModel{}, QuenchModel{}, 60.0, 0.0, 1);
  const auto m4 = odmr_map(b_grid, f_grid, thetas, FieldConfig{145.0, 0.0}, drive,
                           params(), g, mag, OdmrModel{}, QuenchModel{}, 60.0, 0.0, 4);
  CHECK(m1.contrast == m4.contrast);
}
