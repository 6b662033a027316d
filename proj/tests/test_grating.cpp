#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fibercav/grating.hpp"
#include "fibercav/grid.hpp"

using namespace fibercav;

namespace {

GratingSpec uniform_spec(double lambda_b, double length, double delta_n) {
  GratingSpec g;
  g.length = length;
  g.n_eff = 1.45;
  g.period_start = g.period_end = lambda_b / (2.0 * g.n_eff);
  g.delta_n = delta_n;
  g.apodization = Apodization::uniform;
  g.n_sections = 80;
  return g;
}

GratingResponse flat_response(complexd r, double nu_lo, double nu_hi) {
  GratingResponse resp;
  const int n = 64;
  for (int k = 0; k < n; ++k) {
    const double nu = nu_lo + (nu_hi - nu_lo) * k / (n - 1);
    resp.frequency.push_back(nu);
    resp.wavelength.push_back(frequency_to_wavelength(nu));
    resp.r.push_back(r);
    resp.t.push_back(std::sqrt(std::max(0.0, 1.0 - std::norm(r))));
  }
  resp.group_delay.assign(n, 0.0);
  resp.gdd.assign(n, 0.0);
  resp.tod.assign(n, 0.0);
  resp.band_edge_blue = resp.wavelength.back();
  resp.band_edge_red = resp.wavelength.front();
  return resp;
}

}  // namespace

TEST_CASE("section matrices are unimodular") {
  for (double delta : {-8000.0, -10.0, 0.0, 55.0, 12000.0}) {
    for (double kappa : {0.0, 30.0, 900.0, 15000.0}) {
      const auto f = detail::section_matrix(delta, kappa, 25e-6);
      const complexd det = f.m11 * f.m22 - f.m12 * f.m21;
      CHECK_THAT(std::abs(det - complexd(1.0, 0.0)), Catch::Matchers::WithinAbs(0.0, 1e-12));
    }
  }
}

TEST_CASE("uniform grating peak reflectivity matches tanh^2(kappa L)") {
  const double lambda_b = 1550e-9;
  const auto spec = uniform_spec(lambda_b, 2.0e-3, 4e-4);
  // band chosen symmetric in frequency so the center sample sits exactly at
  // the Bragg frequency (no interpolation in the comparison)
  const double nu_b = wavelength_to_frequency(lambda_b);
  const double half = 500e9;
  const auto resp = grating_response(spec, frequency_to_wavelength(nu_b + half),
                                     frequency_to_wavelength(nu_b - half), 4001);
  const double kappa = constants::pi * spec.delta_n / lambda_b;
  const double analytic = std::pow(std::tanh(kappa * spec.length), 2);
  CHECK_THAT(std::norm(resp.r[2000]), Catch::Matchers::WithinAbs(analytic, 1e-6));

  SECTION("passivity and losslessness") {
    for (size_t k = 0; k < resp.r.size(); k += 97) {
      const double sum = std::norm(resp.r[k]) + std::norm(resp.t[k]);
      CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-9));
    }
  }

  SECTION("group delay symmetric about the Bragg wavelength") {
    const double nu_b = wavelength_to_frequency(lambda_b);
    for (double off : {5e9, 20e9, 60e9}) {
      const auto gd_at = [&](double nu) {
        const double step = (resp.freq_max() - resp.freq_min()) / (resp.frequency.size() - 1);
        const size_t i = static_cast<size_t>((nu - resp.freq_min()) / step);
        return resp.group_delay[i];
      };
      const double lo = gd_at(nu_b - off), hi = gd_at(nu_b + off);
      CHECK_THAT(lo - hi, Catch::Matchers::WithinAbs(0.0, 0.02 * std::abs(lo + hi) + 1e-15));
    }
  }
}

TEST_CASE("chirped response converges with section count") {
  GratingSpec g;
  g.length = 3.5e-3;
  g.n_eff = 1.45;
  const double lam_c = 1546.5e-9;
  g.period_start = (lam_c - 2e-9) / (2.0 * g.n_eff);
  g.period_end = (lam_c + 2e-9) / (2.0 * g.n_eff);
  g.delta_n = 6e-4;
  g.n_sections = 200;
  const auto a = grating_response(g, lam_c - 4e-9, lam_c + 4e-9, 801);
  g.n_sections = 400;
  const auto b = grating_response(g, lam_c - 4e-9, lam_c + 4e-9, 801);
  double worst = 0.0;
  for (size_t k = 0; k < a.r.size(); ++k)
    worst = std::max(worst, std::abs(std::norm(a.r[k]) - std::norm(b.r[k])));
  CHECK(worst < 1e-4);
}

TEST_CASE("opposite-chirp pair cancels group-delay dispersion") {
  GratingSpec g;
  g.length = 3.5e-3;
  g.n_eff = 1.45;
  const double lam_c = 1546.5e-9;
  g.period_start = (lam_c - 2e-9) / (2.0 * g.n_eff);
  g.period_end = (lam_c + 2e-9) / (2.0 * g.n_eff);
  g.delta_n = 8e-4;
  g.n_sections = 300;
  const auto fwd = grating_response(g, lam_c - 4e-9, lam_c + 4e-9, 4001);
  const auto rev = grating_response(mirrored(g), lam_c - 4e-9, lam_c + 4e-9, 4001);

  // pulse-averaged dispersion over the central 50% of the reflection band;
  // the point-wise group-delay ripple is oscillatory and averages out
  const double nu_c = wavelength_to_frequency(lam_c);
  const double half = 0.25 * wavelength_band_to_hz(4e-9, lam_c);
  const auto fit_f = fit_reflection_phase(fwd, nu_c, half);
  const auto fit_r = fit_reflection_phase(rev, nu_c, half);
  CHECK(std::abs(fit_f.gdd + fit_r.gdd) <
        0.05 * std::max(std::abs(fit_f.gdd), std::abs(fit_r.gdd)));
  // sanity: each grating alone carries appreciable in-band dispersion, with
  // opposite signs
  CHECK(std::abs(fit_f.gdd) > 1e-24);
  CHECK(fit_f.gdd * fit_r.gdd < 0.0);
}

TEST_CASE("band away from resonance is tagged") {
  const auto spec = uniform_spec(1550e-9, 2e-3, 4e-4);
  const auto resp = grating_response(spec, 1570e-9, 1580e-9, 256);
  CHECK(resp.out_of_band_warning);
  CHECK(resp.peak_reflectivity() < 0.01);
}

TEST_CASE("index-contrast calibration") {
  SECTION("closed-form uniform oracle: kappa L = atanh(sqrt(R))") {
    auto templ = uniform_spec(1550e-9, 10e-3, 0.0);
    const auto spec = calibrate_index_contrast(templ, {.peak_reflectivity = 0.998});
    const double kappa_l = constants::pi * spec.delta_n * spec.length / 1550e-9;
    CHECK_THAT(kappa_l, Catch::Matchers::WithinRel(std::atanh(std::sqrt(0.998)), 1e-6));
    CHECK_THAT(std::pow(std::tanh(kappa_l), 2), Catch::Matchers::WithinAbs(0.998, 1e-9));
  }

  SECTION("zero target turns the grating off") {
    auto templ = uniform_spec(1550e-9, 10e-3, 3e-4);
    CHECK(calibrate_index_contrast(templ, {.peak_reflectivity = 0.0}).delta_n == 0.0);
  }

  SECTION("spliced-cavity grating: R = 0.998 with 0.8 nm bandwidth") {
    GratingSpec templ = uniform_spec(1550e-9, 2.5e-3, 0.0);
    templ.apodization = Apodization::raised_cosine;
    templ.edge_fraction = 0.2;
    const auto spec = calibrate_index_contrast(
        templ, {.peak_reflectivity = 0.998, .bandwidth_fwhm = 0.8e-9});
    const auto resp = grating_response(spec, 1547e-9, 1553e-9, 4001);
    CHECK_THAT(resp.peak_reflectivity(), Catch::Matchers::WithinAbs(0.998, 0.998 * 0.01));
    CHECK_THAT(resp.bandwidth_fwhm(), Catch::Matchers::WithinRel(0.8e-9, 0.01));
  }

  SECTION("monolithic grating: 4 nm band, R = 0.990 at 1547.2 nm") {
    GratingSpec templ;
    templ.length = 3.5e-3;
    templ.n_eff = 1.45;
    const double lam_c = 1546.5e-9;
    templ.period_start = (lam_c - 1.5e-9) / (2.0 * templ.n_eff);
    templ.period_end = (lam_c + 1.5e-9) / (2.0 * templ.n_eff);
    templ.delta_n = 5e-4;
    templ.apodization = Apodization::raised_cosine;
    templ.n_sections = 200;
    const auto spec = calibrate_index_contrast(templ, {.peak_reflectivity = 0.990,
                                                       .bandwidth_fwhm = 4e-9,
                                                       .eval_wavelength = 1547.2e-9});
    const auto resp = grating_response(spec, lam_c - 8e-9, lam_c + 8e-9, 4001);
    CHECK_THAT(resp.reflectivity_at(wavelength_to_frequency(1547.2e-9)),
               Catch::Matchers::WithinAbs(0.990, 0.990 * 0.01));
    CHECK_THAT(resp.bandwidth_fwhm(), Catch::Matchers::WithinRel(4e-9, 0.05));
  }

  SECTION("infeasible target reports best achieved values") {
    // 50 um of grating cannot reach R = 0.998 under the index-contrast cap
    auto templ = uniform_spec(1550e-9, 5e-5, 0.0);
    try {
      calibrate_index_contrast(templ, {.peak_reflectivity = 0.998});
      FAIL("expected CalibrationError");
    } catch (const CalibrationError& e) {
      CHECK(e.best_reflectivity < 0.998);
      CHECK(e.best_reflectivity > 0.5);  // best-achieved diagnostics are populated
    }
  }
}

TEST_CASE("apply_reflection") {
  TimeFrequencyGrid grid{.n_points = 1024, .time_span = 1e-9, .carrier_wavelength = 1550e-9};
  const double nu0 = wavelength_to_frequency(1550e-9);
  const auto pulse = make_gaussian_pulse(grid, PulseWidth::fwhm_duration(15e-12), 1.0, 0.0, nu0);
  const double nyq = grid.n_points * grid.df();

  SECTION("perfect mirror is the identity") {
    const auto resp = flat_response(complexd(1.0, 0.0), nu0 - nyq, nu0 + nyq);
    const auto out = apply_reflection(pulse, resp);
    double peak = 0.0;
    for (const auto& v : pulse.samples) peak = std::max(peak, std::abs(v));
    for (size_t i = 0; i < out.samples.size(); i += 31)
      CHECK_THAT(std::abs(out.samples[i] - pulse.samples[i]),
                 Catch::Matchers::WithinAbs(0.0, 1e-10 * peak));
  }

  SECTION("uniform r = i 0.995 scales photons by 0.990") {
    const auto resp = flat_response(complexd(0.0, 0.995), nu0 - nyq, nu0 + nyq);
    const auto out = apply_reflection(pulse, resp);
    CHECK_THAT(photon_number(out), Catch::Matchers::WithinRel(0.995 * 0.995, 1e-9));
    CHECK_THAT(std::arg(out.samples[grid.n_points / 2] / pulse.samples[grid.n_points / 2]),
               Catch::Matchers::WithinAbs(constants::pi / 2.0, 1e-9));
  }

  SECTION("narrow response band raises an out-of-band error") {
    const auto resp = flat_response(complexd(1.0, 0.0), nu0 - 20e9, nu0 + 20e9);
    CHECK_THROWS_AS(apply_reflection(pulse, resp), OutOfBandError);
  }
}

TEST_CASE("blue-edge cladding loss lowers blue-side reflectivity only") {
  GratingSpec g;
  g.length = 3.5e-3;
  g.n_eff = 1.45;
  const double lam_c = 1546.5e-9;
  g.period_start = (lam_c - 2e-9) / (2.0 * g.n_eff);
  g.period_end = (lam_c + 2e-9) / (2.0 * g.n_eff);
  g.delta_n = 8e-4;
  g.n_sections = 200;
  const auto clean = grating_response(g, lam_c - 4e-9, lam_c + 4e-9, 1001);
  g.cladding_loss_blue = 0.005;
  const auto lossy = grating_response(g, lam_c - 4e-9, lam_c + 4e-9, 1001);

  const double red = wavelength_to_frequency(lam_c + 1.5e-9);
  const double blue = wavelength_to_frequency(lam_c - 1.5e-9);
  CHECK_THAT(lossy.reflectivity_at(red),
             Catch::Matchers::WithinRel(clean.reflectivity_at(red), 2e-3));
  CHECK(lossy.reflectivity_at(blue) < clean.reflectivity_at(blue) * 0.9975);
}
