#include <catch2/catch_amalgamated.hpp>
#include <algorithm>
#include <cmath>

#include "hybridsim/sensing.hpp"
#include "test_support.hpp"

using namespace hybridsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SensingConfig desk_config() {
  SensingConfig cfg;
  cfg.gamma_target = 2.8024;
  cfg.n_targets = 100;
  cfg.f_cavity = 2862.0;
  cfg.kappa = 1.0;
  cfg.g_single = 1.0e-3;
  cfg.b_drive = 2.0 * 2862.0 / 2.8024;  // Rabi-matching drive field
  cfg.pump_time = 5.0;
  for (int i = 0; i < 201; ++i) cfg.tau_grid.push_back(2.0 * i / 200.0);
  return cfg;
}

SensingContext desk_context() {
  SensingContext ctx;
  ctx.params = default_params();
  ctx.geometry.nd_x = 20.0;
  ctx.field = FieldConfig{145.0, 0.0};
  ctx.leak_field_scale = 20.0;
  return ctx;
}

double matched_theta(const SensingConfig& cfg, const SensingContext& ctx) {
  // orientation whose lower transition meets the cavity frequency
  double lo = 0.0, hi = kPi / 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double f =
        transition_frequencies(NVConfig::from(ctx.params, mid, ctx.field.b_ext)).first;
    (f < cfg.f_cavity ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("target Rabi frequency") {
  SensingConfig cfg = desk_config();
  cfg.b_drive = 0.0;
  CHECK(target_rabi(cfg) == 0.0);
  cfg.b_drive = 10.0;
  CHECK_THAT(target_rabi(cfg), WithinRel(14.012, 1e-9));
  cfg.b_drive = 20.0;
  CHECK_THAT(target_rabi(cfg), WithinRel(2.0 * 14.012, 1e-9));
}

TEST_CASE("cavity amplitude: matching filter and pump saturation") {
  SensingConfig cfg = desk_config();

  // far-detuned targets barely pump the cavity
  SensingConfig detuned = cfg;
  detuned.b_drive = cfg.b_drive * 1.5;  // Omega_t off by ~1431 MHz >> kappa
  CHECK(cavity_amplitude(detuned) < 1e-5 * cavity_amplitude(cfg));

  // resonant, long pump: steady state N g / kappa
  SensingConfig steady = cfg;
  steady.b_drive = 2.0 * cfg.f_cavity / cfg.gamma_target;
  steady.pump_time = 1.0e3;
  CHECK_THAT(cavity_amplitude(steady),
             WithinRel(cfg.n_targets * cfg.g_single / cfg.kappa, 1e-6));

  // pump_time = 1/kappa reaches the 1 - 1/e point
  SensingConfig partial = steady;
  partial.pump_time = 1.0 / cfg.kappa;
  CHECK_THAT(cavity_amplitude(partial) / cavity_amplitude(steady),
             WithinRel(1.0 - std::exp(-1.0), 1e-6));
}

TEST_CASE("protocol round trip and concentration estimate") {
  const SensingConfig cfg = desk_config();
  const SensingContext ctx = desk_context();
  const NVConfig nv =
      NVConfig::from(ctx.params, matched_theta(cfg, ctx), ctx.field.b_ext);

  const SensingTrace trace = run_protocol(cfg, nv, DecoherenceParams::none(), ctx);
  REQUIRE(trace.nv_rabi > 1.0);
  CHECK_THAT(trace.inferred_rabi, WithinRel(trace.nv_rabi, 0.02));

  const double estimate = estimate_concentration(trace, cfg, ctx);
  CHECK_THAT(estimate, WithinAbs(100.0, 2.0));

  // doubling the target count doubles the inferred Rabi frequency
  SensingConfig doubled = cfg;
  doubled.n_targets = 200;
  const SensingTrace trace2 = run_protocol(doubled, nv, DecoherenceParams::none(), ctx);
  CHECK_THAT(trace2.nv_rabi, WithinRel(2.0 * trace.nv_rabi, 1e-9));

  // no targets: flat trace, estimate 0
  SensingConfig empty = cfg;
  empty.n_targets = 0;
  const SensingTrace flat = run_protocol(empty, nv, DecoherenceParams::none(), ctx);
  CHECK(flat.inferred_rabi == 0.0);
  CHECK(estimate_concentration(flat, empty, ctx) == 0.0);
  for (double p : flat.nv_population) REQUIRE(p == 1.0);

  // the N * g degeneracy: halving g with the same trace doubles nothing,
  // re-running with doubled g halves the estimate
  SensingConfig g2 = cfg;
  g2.g_single *= 2.0;
  CHECK_THAT(estimate_concentration(trace, g2, ctx), WithinRel(estimate / 2.0, 1e-9));
}

TEST_CASE("protocol preconditions") {
  const SensingConfig cfg = desk_config();
  const SensingContext ctx = desk_context();

  // NV off-resonant with the cavity
  const NVConfig misaligned = NVConfig::from(ctx.params, 0.0, ctx.field.b_ext);
  CHECK_THROWS_AS(run_protocol(cfg, misaligned, DecoherenceParams::none(), ctx),
                  std::invalid_argument);

  // cavity outside the spin-wave band at the configured bias field
  SensingContext low_field = ctx;
  low_field.field.b_ext = 15.0;
  const NVConfig nv = NVConfig::from(ctx.params, matched_theta(cfg, ctx), 15.0);
  CHECK_THROWS_AS(run_protocol(cfg, nv, DecoherenceParams::none(), low_field),
                  std::invalid_argument);
}

TEST_CASE("drive-field sweep peaks at the Rabi-matching condition") {
  const SensingConfig cfg = desk_config();
  const SensingContext ctx = desk_context();

  std::vector<double> b_grid;
  for (int i = 0; i < 181; ++i) b_grid.push_back(2020.0 + 0.25 * i);
  const auto response = sweep_drive_field(cfg, b_grid, ctx);

  const auto it = std::max_element(response.begin(), response.end());
  const double b_peak = b_grid[it - response.begin()];
  const double b_match = 2.0 * cfg.f_cavity / cfg.gamma_target;
  CHECK(std::abs(b_peak - b_match) <= 0.25);

  // the kappa-limited width: half maximum roughly kappa wide in Omega_t
  const double half = *it / 2.0;
  double width_b = 0.0;
  for (std::size_t i = 0; i + 1 < response.size(); ++i) {
    if ((response[i] - half) * (response[i + 1] - half) < 0.0) {
      width_b = std::abs(b_grid[i] - b_peak) * 2.0;
    }
  }
  const double expected_width_b = 2.0 * cfg.kappa * 2.0 / cfg.gamma_target;
  CHECK_THAT(width_b, WithinRel(expected_width_b, 0.3));
}

TEST_CASE("species selectivity: two gyromagnetic ratios give two peaks") {
  const SensingContext ctx = desk_context();
  SensingConfig a = desk_config();
  SensingConfig b = desk_config();
  b.gamma_target = 1.4;  // second species

  const double b_a = 2.0 * a.f_cavity / a.gamma_target;
  const double b_b = 2.0 * b.f_cavity / b.gamma_target;
  REQUIRE(std::abs(b_b - b_a) > 10.0 * 2.0 * a.kappa * 2.0 / a.gamma_target);

  std::vector<double> b_grid;
  for (double v = 1900.0; v <= 4400.0; v += 1.0) b_grid.push_back(v);
  const auto ra = sweep_drive_field(a, b_grid, ctx);
  const auto rb = sweep_drive_field(b, b_grid, ctx);

  std::vector<double> combined(b_grid.size());
  for (std::size_t i = 0; i < b_grid.size(); ++i) combined[i] = ra[i] + rb[i];

  // local maxima of the combined response sit at each species' matching field
  std::vector<double> peaks;
  for (std::size_t i = 1; i + 1 < combined.size(); ++i) {
    if (combined[i] > combined[i - 1] && combined[i] > combined[i + 1] &&
        combined[i] > 0.1 * *std::max_element(combined.begin(), combined.end())) {
      peaks.push_back(b_grid[i]);
    }
  }
  REQUIRE(peaks.size() == 2);
  CHECK_THAT(peaks[0], WithinAbs(b_a, 1.5));
  CHECK_THAT(peaks[1], WithinAbs(b_b, 1.5));
}
