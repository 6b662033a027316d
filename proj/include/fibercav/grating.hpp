#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fibercav/common.hpp"
#include "fibercav/grid.hpp"

namespace fibercav {

enum class Apodization { uniform, raised_cosine, gaussian };

// Physical description of a fiber Bragg grating. z = 0 is the side the light
// enters (for a cavity grating, the cavity side); a linear period chirp runs
// from period_start at z = 0 to period_end at z = length.
struct GratingSpec {
  double length = 3.5e-3;        // m
  double n_eff = 1.45;
  double period_start = 534.48e-9;  // m
  double period_end = 534.48e-9;    // m
  double delta_n = 1e-4;         // peak index modulation
  Apodization apodization = Apodization::raised_cosine;
  double edge_fraction = 0.2;
  int n_sections = 200;
  // phenomenological blue-edge loss per reflection (power fraction at the blue
  // band edge, ramping linearly to zero at the red edge)
  double cladding_loss_blue = 0.0;

  bool is_uniform() const { return period_start == period_end; }
  double bragg_wavelength_start() const { return 2.0 * n_eff * period_start; }
  double bragg_wavelength_end() const { return 2.0 * n_eff * period_end; }
  double bragg_wavelength_center() const {
    return n_eff * (period_start + period_end);
  }
};

// Spatial mirror image: the same physical grating seen from the other end.
inline GratingSpec mirrored(GratingSpec g) {
  std::swap(g.period_start, g.period_end);
  return g;
}

inline double apodization_profile(const GratingSpec& g, double z_frac) {
  switch (g.apodization) {
    case Apodization::uniform:
      return 1.0;
    case Apodization::raised_cosine: {
      const double e = std::clamp(g.edge_fraction, 1e-6, 0.5);
      if (z_frac < e) return 0.5 * (1.0 - std::cos(constants::pi * z_frac / e));
      if (z_frac > 1.0 - e)
        return 0.5 * (1.0 - std::cos(constants::pi * (1.0 - z_frac) / e));
      return 1.0;
    }
    case Apodization::gaussian: {
      const double s = std::max(g.edge_fraction, 1e-6);
      const double u = (z_frac - 0.5) / s;
      return std::exp(-0.5 * u * u);
    }
  }
  return 1.0;
}

// Complex two-port response sampled uniformly in frequency.
struct GratingResponse {
  std::vector<double> frequency;    // Hz, ascending
  std::vector<double> wavelength;   // m, descending (paired with frequency)
  std::vector<complexd> r, t;
  std::vector<double> group_delay;  // s, of the reflection
  std::vector<double> gdd;          // s^2
  std::vector<double> tod;          // s^3
  bool out_of_band_warning = false;  // requested band missed the resonance
  // half-max edges of the main stopband of |r|^2
  double band_edge_blue = 0.0;  // m (shorter wavelength)
  double band_edge_red = 0.0;   // m

  double freq_min() const { return frequency.front(); }
  double freq_max() const { return frequency.back(); }

  bool covers(double nu) const { return nu >= freq_min() && nu <= freq_max(); }

  complexd reflection_at(double nu) const { return interp(r, nu); }
  complexd transmission_at(double nu) const { return interp(t, nu); }

  double peak_reflectivity() const {
    double m = 0.0;
    for (const auto& v : r) m = std::max(m, std::norm(v));
    return m;
  }

  double reflectivity_at(double nu) const { return std::norm(reflection_at(nu)); }

  bool in_reflection_band(double nu) const {
    if (!covers(nu)) return false;
    const double lam = frequency_to_wavelength(nu);
    return lam >= band_edge_blue && lam <= band_edge_red;
  }

  // FWHM of |r|^2 in wavelength
  double bandwidth_fwhm() const { return band_edge_red - band_edge_blue; }

 private:
  // magnitude/phase interpolation: exact on pure-phase (lossless in-band)
  // responses, where complex-linear interpolation would bleed |r| below 1
  complexd interp(const std::vector<complexd>& a, double nu) const {
    if (!covers(nu)) throw OutOfBandError("frequency outside computed grating band");
    const double step = (freq_max() - freq_min()) / (frequency.size() - 1);
    const double x = (nu - freq_min()) / step;
    const size_t i = std::min(static_cast<size_t>(x), frequency.size() - 2);
    const double f = x - i;
    const double m0 = std::abs(a[i]), m1 = std::abs(a[i + 1]);
    if (m0 == 0.0 || m1 == 0.0) return a[i] * (1.0 - f) + a[i + 1] * f;
    const double dphi = std::arg(a[i + 1] / a[i]);
    return std::polar(m0 + f * (m1 - m0), std::arg(a[i]) + f * dphi);
  }
};

namespace detail {

struct Mat2c {
  complexd m11{1.0, 0.0}, m12{0.0, 0.0}, m21{0.0, 0.0}, m22{1.0, 0.0};
};

// Uniform-section coupled-mode matrix for local detuning delta and coupling
// kappa over length d. det = 1 for the lossless model. gamma^2 = kappa^2 -
// delta^2 is real, so the hyperbolic/oscillatory branches stay in real
// arithmetic.
inline Mat2c section_matrix(double delta, double kappa, double d) {
  const double g2 = kappa * kappa - delta * delta;
  double ch, sh_over_g;  // cosh(g d) and sinh(g d)/g continued through g^2 < 0
  if (std::abs(g2) * d * d < 1e-18) {
    ch = 1.0 + 0.5 * g2 * d * d;
    sh_over_g = d;
  } else if (g2 > 0.0) {
    const double g = std::sqrt(g2);
    ch = std::cosh(g * d);
    sh_over_g = std::sinh(g * d) / g;
  } else {
    const double g = std::sqrt(-g2);
    ch = std::cos(g * d);
    sh_over_g = std::sin(g * d) / g;
  }
  Mat2c f;
  f.m11 = complexd(ch, -delta * sh_over_g);
  f.m12 = complexd(0.0, -kappa * sh_over_g);
  f.m21 = complexd(0.0, kappa * sh_over_g);
  f.m22 = complexd(ch, delta * sh_over_g);
  return f;
}

inline Mat2c multiply(const Mat2c& a, const Mat2c& b) {  // a*b
  Mat2c out;
  out.m11 = a.m11 * b.m11 + a.m12 * b.m21;
  out.m12 = a.m11 * b.m12 + a.m12 * b.m22;
  out.m21 = a.m21 * b.m11 + a.m22 * b.m21;
  out.m22 = a.m21 * b.m12 + a.m22 * b.m22;
  return out;
}

inline void unwrap_phase(std::vector<double>& phi) {
  for (size_t i = 1; i < phi.size(); ++i) {
    double d = phi[i] - phi[i - 1];
    while (d > constants::pi) {
      phi[i] -= 2.0 * constants::pi;
      d = phi[i] - phi[i - 1];
    }
    while (d < -constants::pi) {
      phi[i] += 2.0 * constants::pi;
      d = phi[i] - phi[i - 1];
    }
  }
}

inline std::vector<double> centered_derivative(const std::vector<double>& y, double dx) {
  const size_t n = y.size();
  std::vector<double> d(n, 0.0);
  if (n < 3) return d;
  for (size_t i = 1; i + 1 < n; ++i) d[i] = (y[i + 1] - y[i - 1]) / (2.0 * dx);
  d[0] = (y[1] - y[0]) / dx;
  d[n - 1] = (y[n - 1] - y[n - 2]) / dx;
  return d;
}

}  // namespace detail

// Piecewise-uniform transfer-matrix response of the grating over a wavelength
// band, sampled uniformly in frequency. Coupling kappa(z) = pi dn apod(z) / lambda,
// local detuning delta(z) = 2 pi n_eff nu / c - pi / Lambda(z).
inline GratingResponse grating_response(const GratingSpec& spec, double lambda_lo,
                                        double lambda_hi, int n_samples) {
  if (lambda_lo >= lambda_hi) throw SimulationError("grating band: lambda_lo must be < lambda_hi");
  if (n_samples < 3) throw SimulationError("grating band needs at least 3 samples");
  const int n_sec = std::max(spec.n_sections, spec.is_uniform() ? 1 : 50);
  const double d = spec.length / n_sec;

  std::vector<double> inv_period(n_sec), apod(n_sec);
  for (int j = 0; j < n_sec; ++j) {
    const double zf = (j + 0.5) / n_sec;
    inv_period[j] = 1.0 / (spec.period_start + (spec.period_end - spec.period_start) * zf);
    apod[j] = apodization_profile(spec, zf);
  }

  GratingResponse resp;
  resp.frequency.resize(n_samples);
  resp.wavelength.resize(n_samples);
  resp.r.resize(n_samples);
  resp.t.resize(n_samples);
  const double nu_lo = wavelength_to_frequency(lambda_hi);
  const double nu_hi = wavelength_to_frequency(lambda_lo);
  for (int k = 0; k < n_samples; ++k) {
    const double nu = nu_lo + (nu_hi - nu_lo) * k / (n_samples - 1);
    resp.frequency[k] = nu;
    resp.wavelength[k] = frequency_to_wavelength(nu);
    const double beta = 2.0 * constants::pi * spec.n_eff * nu / constants::c_light;
    const double kappa0 = constants::pi * spec.delta_n * nu / constants::c_light;
    detail::Mat2c m;
    for (int j = 0; j < n_sec; ++j) {
      const double delta = beta - constants::pi * inv_period[j];
      m = detail::multiply(detail::section_matrix(delta, kappa0 * apod[j], d), m);
    }
    resp.r[k] = -m.m21 / m.m22;
    resp.t[k] = complexd(1.0, 0.0) / m.m22;
  }

  // stopband edges (half max of |r|^2), used for band checks and loss ramp
  double rmax = 0.0;
  int kpeak = 0;
  for (int k = 0; k < n_samples; ++k) {
    const double v = std::norm(resp.r[k]);
    if (v > rmax) {
      rmax = v;
      kpeak = k;
    }
  }
  resp.out_of_band_warning = rmax < 0.01;
  if (rmax > 0.0) {
    const double half = 0.5 * rmax;
    int lo = kpeak, hi = kpeak;
    while (lo > 0 && std::norm(resp.r[lo]) >= half) --lo;
    while (hi + 1 < n_samples && std::norm(resp.r[hi]) >= half) ++hi;
    // frequency ascending means wavelength descending
    resp.band_edge_red = resp.wavelength[lo];
    resp.band_edge_blue = resp.wavelength[hi];
    // interpolate the crossings for a grid-robust FWHM
    if (lo < kpeak) {
      const double y0 = std::norm(resp.r[lo]), y1 = std::norm(resp.r[lo + 1]);
      const double f = (half - y0) / (y1 - y0);
      resp.band_edge_red = resp.wavelength[lo] + f * (resp.wavelength[lo + 1] - resp.wavelength[lo]);
    }
    if (hi > kpeak) {
      const double y0 = std::norm(resp.r[hi]), y1 = std::norm(resp.r[hi - 1]);
      const double f = (half - y0) / (y1 - y0);
      resp.band_edge_blue = resp.wavelength[hi] + f * (resp.wavelength[hi - 1] - resp.wavelength[hi]);
    }
  }

  if (spec.cladding_loss_blue > 0.0 && rmax > 0.0) {
    const double span = resp.band_edge_red - resp.band_edge_blue;
    for (int k = 0; k < n_samples; ++k) {
      const double frac =
          std::clamp((resp.band_edge_red - resp.wavelength[k]) / span, 0.0, 1.0);
      resp.r[k] *= std::sqrt(1.0 - spec.cladding_loss_blue * frac);
    }
  }

  // dispersion of the reflection: group delay and its derivatives
  std::vector<double> phi(n_samples);
  for (int k = 0; k < n_samples; ++k) phi[k] = std::arg(resp.r[k]);
  detail::unwrap_phase(phi);
  const double domega =
      2.0 * constants::pi * (resp.frequency[1] - resp.frequency[0]);
  auto gd = detail::centered_derivative(phi, domega);
  for (auto& v : gd) v = -v;
  resp.gdd = detail::centered_derivative(gd, domega);
  resp.tod = detail::centered_derivative(resp.gdd, domega);
  resp.group_delay = std::move(gd);
  return resp;
}

// Pulse-averaged dispersion of the reflection: least-squares cubic fit of the
// unwrapped phase over a frequency window. `gdd` is d^2(phi)/dw^2 of the fit
// at the window center and `cubic` the coefficient of (w - w0)^3. A trapped
// pulse responds to these fitted coefficients, not to the point-wise
// group-delay ripple, which averages out over the pulse bandwidth.
struct ReflectionPhaseFit {
  double gdd = 0.0;    // s^2
  double cubic = 0.0;  // s^3, phi3 such that phase term = phi3 (w - w0)^3
};

inline ReflectionPhaseFit fit_reflection_phase(const GratingResponse& resp, double nu0,
                                               double half_width_hz) {
  std::vector<double> x, y;
  for (size_t k = 0; k < resp.frequency.size(); ++k) {
    if (std::abs(resp.frequency[k] - nu0) <= half_width_hz) {
      x.push_back(2.0 * constants::pi * (resp.frequency[k] - nu0));
      y.push_back(std::arg(resp.r[k]));
    }
  }
  if (x.size() < 8) throw SimulationError("phase fit window too narrow");
  detail::unwrap_phase(y);
  // normal equations for phi = c0 + c1 w + c2 w^2 + c3 w^3, scaled for conditioning
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) scale = 1.0;
  double a[4][5] = {};
  for (size_t i = 0; i < x.size(); ++i) {
    double p[4] = {1.0, x[i] / scale, 0.0, 0.0};
    p[2] = p[1] * p[1];
    p[3] = p[2] * p[1];
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) a[r][c] += p[r] * p[c];
      a[r][4] += p[r] * y[i];
    }
  }
  for (int col = 0; col < 4; ++col) {  // Gaussian elimination, partial pivot
    int piv = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    for (int r = 0; r < 4; ++r) {
      if (r == col || a[col][col] == 0.0) continue;
      const double f = a[r][col] / a[col][col];
      for (int c = col; c <= 4; ++c) a[r][c] -= f * a[col][c];
    }
  }
  ReflectionPhaseFit fit;
  fit.gdd = 2.0 * (a[2][4] / a[2][2]) / (scale * scale);
  fit.cubic = (a[3][4] / a[3][3]) / (scale * scale * scale);
  return fit;
}

struct CalibrationTarget {
  double peak_reflectivity = 0.0;
  std::optional<double> bandwidth_fwhm = std::nullopt;   // m, FWHM of |r|^2
  std::optional<double> eval_wavelength = std::nullopt;  // m, where R is pinned
};

namespace detail {

struct GratingProbe {
  double reflectivity = 0.0;
  double bandwidth = 0.0;
};

inline GratingProbe probe_grating(const GratingSpec& spec, const CalibrationTarget& t) {
  const double lam_c = spec.bragg_wavelength_center();
  const double sweep =
      std::abs(spec.bragg_wavelength_end() - spec.bragg_wavelength_start());
  double half = std::max({2.0e-9, 3.0 * sweep, t.bandwidth_fwhm.value_or(0.0) * 3.0});
  const GratingResponse resp =
      grating_response(spec, lam_c - half, lam_c + half, 801);
  GratingProbe p;
  p.reflectivity = t.eval_wavelength
                       ? resp.reflectivity_at(wavelength_to_frequency(*t.eval_wavelength))
                       : resp.peak_reflectivity();
  p.bandwidth = resp.bandwidth_fwhm();
  return p;
}

}  // namespace detail

// Inverse design: find the index contrast (and, jointly, length for uniform
// specs or chirp sweep for chirped specs) hitting a target reflectivity and
// optionally a target bandwidth. Alternating bounded bisections; reflectivity
// is matched to 1e-3 and bandwidth to 5%.
inline GratingSpec calibrate_index_contrast(GratingSpec spec, const CalibrationTarget& target) {
  if (target.peak_reflectivity < 0.0 || target.peak_reflectivity >= 1.0)
    throw CalibrationError("target reflectivity must lie in [0, 1)", 0.0, 0.0);
  if (target.peak_reflectivity == 0.0) {
    spec.delta_n = 0.0;
    return spec;
  }

  const double dn_lo = 1e-8, dn_hi = 2e-2;
  const double kappa_l = std::atanh(std::sqrt(target.peak_reflectivity));

  // At exact Bragg resonance the coupled equations integrate in closed form
  // even with apodization: R = tanh^2( kappa0 * integral apod dz ).
  double apod_frac = 0.0;
  for (int j = 0; j < 1000; ++j) apod_frac += apodization_profile(spec, (j + 0.5) / 1000.0);
  apod_frac /= 1000.0;

  auto solve_dn_for_r = [&](GratingSpec s) {
    // R is monotone in delta_n at fixed geometry
    double lo = dn_lo, hi = dn_hi;
    for (int it = 0; it < 40; ++it) {
      s.delta_n = std::sqrt(lo * hi);
      if (detail::probe_grating(s, target).reflectivity > target.peak_reflectivity)
        hi = s.delta_n;
      else
        lo = s.delta_n;
    }
    s.delta_n = std::sqrt(lo * hi);
    return s;
  };

  GratingSpec best = spec;
  if (spec.is_uniform()) {
    const double lam_b = best.bragg_wavelength_center();
    if (!target.bandwidth_fwhm) {
      best.delta_n = kappa_l * lam_b / (constants::pi * best.length * apod_frac);
      if (best.delta_n > dn_hi) {
        GratingSpec capped = best;
        capped.delta_n = dn_hi;
        const auto p = detail::probe_grating(capped, target);
        throw CalibrationError("target reflectivity infeasible for this grating length",
                               p.reflectivity, p.bandwidth);
      }
      return best;
    }
    // bandwidth is set by kappa (i.e. delta_n); length then pins the peak R.
    // delta_n bounds keep the co-adjusted length physically sane.
    const double l_min = 0.2e-3, l_max = 50e-3;
    double lo = std::max(dn_lo, kappa_l * lam_b / (constants::pi * apod_frac * l_max));
    double hi = std::min(dn_hi, kappa_l * lam_b / (constants::pi * apod_frac * l_min));
    for (int it = 0; it < 60; ++it) {
      best.delta_n = std::sqrt(lo * hi);
      best.length = kappa_l * lam_b / (constants::pi * best.delta_n * apod_frac);
      const auto p = detail::probe_grating(best, target);
      if (p.bandwidth > *target.bandwidth_fwhm)
        hi = best.delta_n;
      else
        lo = best.delta_n;
    }
    best.delta_n = std::sqrt(lo * hi);
    best.length = kappa_l * lam_b / (constants::pi * best.delta_n * apod_frac);
  } else {
    // chirped: sweep controls the bandwidth, delta_n the in-band reflectivity.
    // The two are coupled (delta_n widens the band too), so the sweep
    // bisection re-solves delta_n at every probe.
    const double lam_c = spec.bragg_wavelength_center();
    const bool keep_direction = spec.period_end >= spec.period_start;
    best = solve_dn_for_r(best);
    if (target.bandwidth_fwhm) {
      auto with_sweep = [&](GratingSpec s, double sweep) {
        const double signed_sweep = keep_direction ? sweep : -sweep;
        s.period_start = (lam_c - 0.5 * signed_sweep) / (2.0 * s.n_eff);
        s.period_end = (lam_c + 0.5 * signed_sweep) / (2.0 * s.n_eff);
        return s;
      };
      double lo = 0.2 * *target.bandwidth_fwhm, hi = 3.0 * *target.bandwidth_fwhm;
      for (int it = 0; it < 30; ++it) {
        const double sweep = 0.5 * (lo + hi);
        best = solve_dn_for_r(with_sweep(best, sweep));
        if (detail::probe_grating(best, target).bandwidth > *target.bandwidth_fwhm)
          hi = sweep;
        else
          lo = sweep;
      }
      best = solve_dn_for_r(with_sweep(best, 0.5 * (lo + hi)));
    }
  }

  const auto achieved = detail::probe_grating(best, target);
  const bool r_ok = std::abs(achieved.reflectivity - target.peak_reflectivity) <= 1e-3;
  const bool bw_ok = !target.bandwidth_fwhm ||
                     std::abs(achieved.bandwidth - *target.bandwidth_fwhm) <=
                         0.05 * *target.bandwidth_fwhm;
  if (!r_ok || !bw_ok)
    throw CalibrationError("grating calibration did not reach its targets",
                           achieved.reflectivity, achieved.bandwidth);
  return best;
}

// Frequency-domain reflection of an envelope off the grating (amplitude and
// phase). The response must cover the envelope's full Nyquist band.
inline ComplexEnvelope apply_reflection(const ComplexEnvelope& env, const GratingResponse& resp) {
  auto f = to_frequency(env);
  for (int k = 0; k < env.grid.n_points; ++k) {
    const double nu = env.carrier_hz + env.grid.freq_offset_at(k);
    if (!resp.covers(nu))
      throw OutOfBandError("envelope band exceeds the computed grating response band");
    f[k] *= resp.reflection_at(nu);
  }
  return from_frequency(env.grid, env.carrier_hz, std::move(f));
}

inline ComplexEnvelope apply_transmission(const ComplexEnvelope& env, const GratingResponse& resp) {
  auto f = to_frequency(env);
  for (int k = 0; k < env.grid.n_points; ++k) {
    const double nu = env.carrier_hz + env.grid.freq_offset_at(k);
    if (!resp.covers(nu))
      throw OutOfBandError("envelope band exceeds the computed grating response band");
    f[k] *= resp.transmission_at(nu);
  }
  return from_frequency(env.grid, env.carrier_hz, std::move(f));
}

}  // namespace fibercav
