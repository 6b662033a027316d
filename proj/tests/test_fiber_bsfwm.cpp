#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fibercav/bsfwm.hpp"
#include "fibercav/fiber.hpp"
#include "fibercav/grid.hpp"
#include "fibercav/rng.hpp"

using namespace fibercav;

namespace {

TimeFrequencyGrid grid_1585() {
  return {.n_points = 2048, .time_span = 2e-9, .carrier_wavelength = 1585e-9};
}

// dispersionless, walkoff-free fiber for the analytic two-level limits
FiberParams ideal_fiber(double gamma) {
  FiberParams f;
  f.length = 5.08;
  f.dispersion_slope = 0.0;
  f.gamma_nl = gamma;
  f.loss_db_per_m = 0.0;
  return f;
}

// quasi-flat-top controls: duration far beyond the simulated window
ControlPulsePair flat_controls() {
  ControlPulsePair c;
  c.duration_fwhm = 300e-9;
  c.energy_p = c.energy_q = 1.7e-9;
  return c;
}

double gamma_for_theta(double theta, const ControlPulsePair& c, double length) {
  const double peak = c.peak_power_p();  // equal energies: sqrt(Pp Pq) = peak
  return theta / (2.0 * peak * length);
}

}  // namespace

TEST_CASE("group walkoff") {
  FiberParams fiber;  // defaults: 508 cm, lambda_zd 1435 nm, calibrated slope

  SECTION("equal wavelengths walk off by nothing") {
    CHECK(group_walkoff(fiber, 1312e-9, 1312e-9) == 0.0);
  }

  SECTION("the 1312/1337 control pair walks ~0.7 ps over the cavity") {
    CHECK_THAT(group_walkoff(fiber, 1312e-9, 1337e-9),
               Catch::Matchers::WithinRel(0.7e-12, 0.30));
  }

  SECTION("pairs symmetric about the zero-dispersion frequency are matched") {
    const double nu_zd = wavelength_to_frequency(fiber.lambda_zd);
    const double off = 20e12;
    const double la = frequency_to_wavelength(nu_zd + off);
    const double lb = frequency_to_wavelength(nu_zd - off);
    CHECK(group_walkoff(fiber, la, lb) < 1e-18);
    // signal/control pairs of the experiment are near-matched as a result
    CHECK(group_walkoff(fiber, 1585e-9, 1312e-9) < 0.1e-12);
  }
}

TEST_CASE("convert analytic limits") {
  const auto grid = grid_1585();
  const auto signal = make_gaussian_pulse(grid, PulseWidth::fwhm_bandwidth(34e9), 1.0);

  SECTION("zero-energy controls leave both envelopes untouched") {
    auto controls = flat_controls();
    controls.energy_p = controls.energy_q = 0.0;
    const auto fiber = ideal_fiber(1e-3);
    const auto out = convert(signal, {}, controls, fiber);
    double worst = 0.0, peak = 0.0;
    for (size_t i = 0; i < signal.samples.size(); ++i) {
      worst = std::max(worst, std::abs(out.signal_out.samples[i] - signal.samples[i]));
      peak = std::max(peak, std::abs(signal.samples[i]));
    }
    CHECK(worst < 1e-10 * peak);
    CHECK(photon_number(out.stored_out) == 0.0);
  }

  SECTION("pi/2 coupling area converts completely") {
    auto controls = flat_controls();
    const auto fiber = ideal_fiber(gamma_for_theta(constants::pi / 2.0, controls, 5.08));
    ConvertOptions opt;
    opt.xpm_scale = 0.0;
    const auto out = convert(signal, {}, controls, fiber, opt);
    CHECK(photon_number(out.signal_out) < 1e-6);
    CHECK_THAT(photon_number(out.stored_out), Catch::Matchers::WithinRel(1.0, 1e-6));
  }

  SECTION("conversion efficiency follows sin^2 of the coupling area") {
    auto controls = flat_controls();
    ConvertOptions opt;
    opt.xpm_scale = 0.0;
    for (double theta : {0.3, 0.7, 1.1, 1.4}) {
      const auto fiber = ideal_fiber(gamma_for_theta(theta, controls, 5.08));
      const auto out = convert(signal, {}, controls, fiber, opt);
      CHECK_THAT(photon_number(out.stored_out),
                 Catch::Matchers::WithinAbs(std::pow(std::sin(theta), 2), 1e-4));
    }
  }

  SECTION("read with a pi-shifted control phase undoes the write") {
    auto controls = flat_controls();
    const auto fiber = ideal_fiber(gamma_for_theta(0.72, controls, 5.08));
    ConvertOptions opt;
    opt.xpm_scale = 0.0;
    const auto written = convert(signal, {}, controls, fiber, opt);
    auto read_controls = controls;
    read_controls.relative_phase = constants::pi;
    const auto undone = convert(written.signal_out, written.stored_out, read_controls, fiber, opt);
    CHECK(std::abs(field_overlap(signal, undone.signal_out, 0.0)) > 0.999);
    CHECK(photon_number(undone.stored_out) < 1e-6);
  }
}

TEST_CASE("photon conservation over random control settings") {
  const auto grid = grid_1585();
  const auto signal = make_gaussian_pulse(grid, PulseWidth::fwhm_bandwidth(34e9), 0.99);
  Rng rng(77001);
  ConvertOptions opt;
  opt.n_steps = 64;
  opt.check_conservation = false;
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    FiberParams fiber;
    fiber.gamma_nl = rng.uniform(1e-4, 3e-3);
    fiber.dispersion_slope = rng.uniform(10.0, 60.0);
    ControlPulsePair c;
    c.duration_fwhm = rng.uniform(5e-12, 20e-12);
    c.energy_p = rng.uniform(0.0, 3e-9);
    c.energy_q = rng.uniform(0.0, 3e-9);
    c.delay = rng.uniform(-20e-12, 20e-12);
    c.relative_phase = rng.uniform(0.0, 2.0 * constants::pi);
    ConvertOptions o = opt;
    o.delta_beta = rng.uniform(-2.0, 2.0);
    o.xpm_scale = rng.uniform(0.0, 2.0);
    const auto out = convert(signal, {}, c, fiber, o);
    const double n_out = photon_number(out.signal_out) + photon_number(out.stored_out);
    worst = std::max(worst, std::abs(n_out - 0.99) / 0.99);
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("convert is linear in the quantum fields") {
  const auto grid = grid_1585();
  const auto signal = make_gaussian_pulse(grid, PulseWidth::fwhm_bandwidth(34e9), 1.0);
  FiberParams fiber;
  fiber.gamma_nl = 6e-4;
  ControlPulsePair c;
  c.delay = 2e-12;
  const complexd alpha(0.31, -0.77);

  const auto base = convert(signal, {}, c, fiber);
  const auto scaled_in = convert(scaled(signal, alpha), {}, c, fiber);
  double worst = 0.0, scale = 0.0;
  for (size_t i = 0; i < signal.samples.size(); ++i) {
    worst = std::max({worst,
                      std::abs(scaled_in.signal_out.samples[i] - alpha * base.signal_out.samples[i]),
                      std::abs(scaled_in.stored_out.samples[i] - alpha * base.stored_out.samples[i])});
    scale = std::max(scale, std::abs(base.signal_out.samples[i]));
  }
  CHECK(worst < 1e-9 * scale);
}

TEST_CASE("convert guards") {
  const auto grid = grid_1585();
  const auto signal = make_gaussian_pulse(grid, PulseWidth::fwhm_bandwidth(34e9), 1.0);
  FiberParams fiber;

  SECTION("too few steps") {
    ConvertOptions opt;
    opt.n_steps = 4;
    CHECK_THROWS_AS(convert(signal, {}, ControlPulsePair{}, fiber, opt),
                    IntegrationAccuracyError);
  }

  SECTION("inconsistent stored carrier") {
    auto stored = make_gaussian_pulse(grid, PulseWidth::fwhm_bandwidth(34e9), 1.0, 0.0,
                                      signal.carrier_hz + 1e12);  // not the p-q splitting
    CHECK_THROWS_AS(convert(signal, stored, ControlPulsePair{}, fiber), SimulationError);
  }
}

TEST_CASE("depletion fraction") {
  const auto grid = grid_1585();
  const auto signal = make_gaussian_pulse(grid, PulseWidth::fwhm_bandwidth(34e9), 1.0);
  const double bw = wavelength_band_to_hz(0.3e-9, 1585e-9);

  SECTION("no controls, no depletion") {
    auto controls = flat_controls();
    controls.energy_p = controls.energy_q = 0.0;
    const auto out = convert(signal, {}, controls, ideal_fiber(1e-3));
    CHECK_THAT(depletion_fraction(signal, out.signal_out, bw),
               Catch::Matchers::WithinAbs(0.0, 1e-9));
  }

  SECTION("zero input is undefined") {
    CHECK_THROWS_AS(
        depletion_fraction(ComplexEnvelope::zero(grid, signal.carrier_hz), signal, bw),
        UndefinedResultError);
  }
}
