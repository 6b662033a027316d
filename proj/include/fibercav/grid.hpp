#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "fibercav/common.hpp"
#include "fibercav/fft.hpp"

namespace fibercav {

// Sampling grid shared by all field envelopes. Time axis is centered on zero:
// t_i = (i - n/2) * dt. Frequency samples are offsets from the envelope
// carrier in natural FFT order; each field mode carries its own carrier so the
// multi-THz mode splittings are bookkept analytically rather than sampled.
struct TimeFrequencyGrid {
  int n_points = 4096;
  double time_span = 2e-9;            // s
  double carrier_wavelength = 1550e-9;  // m, default carrier for pulses made on this grid

  double dt() const { return time_span / n_points; }
  double df() const { return 1.0 / time_span; }
  double time_at(int i) const { return (i - n_points / 2) * dt(); }
  // natural FFT ordering: bin k holds offset k*df for k < n/2, (k-n)*df above
  double freq_offset_at(int k) const {
    return (k < n_points / 2 ? k : k - n_points) * df();
  }

  bool operator==(const TimeFrequencyGrid& o) const {
    return n_points == o.n_points && time_span == o.time_span;
  }
};

inline void validate_grid(const TimeFrequencyGrid& g) {
  if (!is_power_of_two(g.n_points))
    throw GridResolutionError("grid n_points must be a power of two");
  if (g.time_span <= 0.0) throw GridResolutionError("grid time_span must be positive");
}

// Complex field envelope, sqrt(photons/s) units in the time domain, so the
// photon number is sum |a|^2 dt. Frequency-domain samples are defined as
// DFT(a)*dt, which makes the transform unitary in photon number.
struct ComplexEnvelope {
  TimeFrequencyGrid grid;
  double carrier_hz = 0.0;
  std::vector<complexd> samples;  // time domain

  static ComplexEnvelope zero(const TimeFrequencyGrid& g, double carrier) {
    validate_grid(g);
    ComplexEnvelope e;
    e.grid = g;
    e.carrier_hz = carrier;
    e.samples.assign(g.n_points, complexd(0.0, 0.0));
    return e;
  }

  bool empty() const { return samples.empty(); }
};

inline void ensure_same_grid(const ComplexEnvelope& a, const ComplexEnvelope& b) {
  if (!(a.grid == b.grid))
    throw GridResolutionError("envelopes live on different grids");
}

inline std::vector<complexd> to_frequency(const ComplexEnvelope& e) {
  auto f = fft_forward(e.samples);
  const double dt = e.grid.dt();
  for (auto& v : f) v *= dt;
  return f;
}

inline ComplexEnvelope from_frequency(const TimeFrequencyGrid& g, double carrier_hz,
                                      std::vector<complexd> freq) {
  const double inv_dt = 1.0 / g.dt();
  for (auto& v : freq) v *= inv_dt;
  ComplexEnvelope e;
  e.grid = g;
  e.carrier_hz = carrier_hz;
  e.samples = fft_inverse(freq);
  return e;
}

inline double photon_number(const ComplexEnvelope& e) {
  double s = 0.0;
  for (const auto& v : e.samples) s += std::norm(v);
  return s * e.grid.dt();
}

inline double photon_number_frequency_domain(const ComplexEnvelope& e) {
  const auto f = to_frequency(e);
  double s = 0.0;
  for (const auto& v : f) s += std::norm(v);
  return s * e.grid.df();
}

inline ComplexEnvelope scaled(ComplexEnvelope e, complexd factor) {
  for (auto& v : e.samples) v *= factor;
  return e;
}

inline ComplexEnvelope added(const ComplexEnvelope& a, const ComplexEnvelope& b) {
  ensure_same_grid(a, b);
  ComplexEnvelope out = a;
  for (size_t i = 0; i < out.samples.size(); ++i) out.samples[i] += b.samples[i];
  return out;
}

struct PulseWidth {
  enum class Kind { duration, bandwidth };
  Kind kind;
  double value;  // s or Hz, FWHM of the intensity profile
  static PulseWidth fwhm_duration(double s) { return {Kind::duration, s}; }
  static PulseWidth fwhm_bandwidth(double hz) { return {Kind::bandwidth, hz}; }
};

// Transform-limited Gaussian, normalized so the measured photon number equals
// mean_photons exactly (numeric normalization, not the continuum formula).
inline ComplexEnvelope make_gaussian_pulse(const TimeFrequencyGrid& grid, PulseWidth width,
                                           double mean_photons, double center_time = 0.0,
                                           std::optional<double> carrier_hz = std::nullopt) {
  validate_grid(grid);
  if (mean_photons < 0.0) throw SimulationError("mean_photons must be >= 0");
  double fwhm_t = width.value;
  if (width.kind == PulseWidth::Kind::bandwidth) {
    if (width.value <= 0.0) throw GridResolutionError("requested bandwidth must be positive");
    fwhm_t = constants::gaussian_tbp / width.value;
  }
  if (fwhm_t < 8.0 * grid.dt())
    throw GridResolutionError("requested width under-resolved: fewer than 8 samples across FWHM");
  if (fwhm_t >= grid.time_span / 4.0)
    throw GridResolutionError("requested width exceeds a quarter of the time span");

  const double carrier = carrier_hz.value_or(wavelength_to_frequency(grid.carrier_wavelength));
  ComplexEnvelope e = ComplexEnvelope::zero(grid, carrier);
  if (mean_photons == 0.0) return e;

  // intensity FWHM -> amplitude profile exp(-(t-t0)^2 / (4 sigma^2))
  const double sigma = fwhm_t / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  for (int i = 0; i < grid.n_points; ++i) {
    const double t = grid.time_at(i) - center_time;
    e.samples[i] = std::exp(-t * t / (4.0 * sigma * sigma));
  }
  const double n0 = photon_number(e);
  const double amp = std::sqrt(mean_photons / n0);
  for (auto& v : e.samples) v *= amp;
  return e;
}

enum class Domain { time, frequency };

namespace detail {

// Interpolated FWHM of a sampled intensity profile on a uniform axis.
// Tallest peak wins; ties break toward the earlier sample.
inline double fwhm_of_profile(const std::vector<double>& y, double step) {
  int peak = 0;
  double ymax = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    if (y[i] > ymax) {
      ymax = y[i];
      peak = static_cast<int>(i);
    }
  }
  if (ymax <= 0.0) throw UndefinedResultError("fwhm undefined for an all-zero profile");
  const double half = 0.5 * ymax;
  const int n = static_cast<int>(y.size());

  double left = 0.0;
  for (int i = peak; i >= 0; --i) {
    if (y[i] < half) {
      const double frac = (half - y[i]) / (y[i + 1] - y[i]);
      left = (i + frac);
      break;
    }
    if (i == 0) left = 0.0;  // profile clipped at grid edge
  }
  double right = static_cast<double>(n - 1);
  for (int i = peak; i < n; ++i) {
    if (y[i] < half) {
      const double frac = (half - y[i]) / (y[i - 1] - y[i]);
      right = (i - frac);
      break;
    }
  }
  return (right - left) * step;
}

}  // namespace detail

inline double fwhm(const ComplexEnvelope& e, Domain domain) {
  if (domain == Domain::time) {
    std::vector<double> intens(e.samples.size());
    for (size_t i = 0; i < intens.size(); ++i) intens[i] = std::norm(e.samples[i]);
    return detail::fwhm_of_profile(intens, e.grid.dt());
  }
  // ascending-frequency order
  const auto f = to_frequency(e);
  const int n = e.grid.n_points;
  std::vector<double> intens(n);
  for (int k = 0; k < n; ++k) {
    const int src = (k + n / 2) % n;  // shift so index 0 is the most negative offset
    intens[k] = std::norm(f[src]);
  }
  return detail::fwhm_of_profile(intens, e.grid.df());
}

// Exact circular delay via a spectral phase ramp.
inline ComplexEnvelope delayed(const ComplexEnvelope& e, double tau) {
  if (tau == 0.0) return e;
  auto f = to_frequency(e);
  for (int k = 0; k < e.grid.n_points; ++k) {
    const double nu = e.grid.freq_offset_at(k);
    f[k] *= std::polar(1.0, -2.0 * constants::pi * nu * tau);
  }
  return from_frequency(e.grid, e.carrier_hz, std::move(f));
}

// Normalized inner product <a|b(tau)> / sqrt(Na Nb); |result| <= 1.
inline complexd field_overlap(const ComplexEnvelope& a, const ComplexEnvelope& b,
                              double relative_delay = 0.0) {
  ensure_same_grid(a, b);
  const double scale = std::max(std::abs(a.carrier_hz), 1.0);
  if (std::abs(a.carrier_hz - b.carrier_hz) > 1e-9 * scale)
    throw SimulationError("field_overlap requires a common carrier");
  const double na = photon_number(a);
  const double nb = photon_number(b);
  if (na <= 0.0 || nb <= 0.0)
    throw UndefinedResultError("field_overlap undefined for zero-energy input");
  const ComplexEnvelope bd = delayed(b, relative_delay);
  complexd acc(0.0, 0.0);
  for (size_t i = 0; i < a.samples.size(); ++i)
    acc += std::conj(a.samples[i]) * bd.samples[i];
  return acc * a.grid.dt() / std::sqrt(na * nb);
}

// Multiply the spectrum by H(frequency offset from carrier).
inline ComplexEnvelope apply_spectral_transfer(
    const ComplexEnvelope& e, const std::function<complexd(double)>& h) {
  auto f = to_frequency(e);
  for (int k = 0; k < e.grid.n_points; ++k) f[k] *= h(e.grid.freq_offset_at(k));
  return from_frequency(e.grid, e.carrier_hz, std::move(f));
}

// Ideal top-hat spectral filter, width in Hz, centered center_offset_hz from
// the carrier.
inline ComplexEnvelope spectral_tophat(const ComplexEnvelope& e, double center_offset_hz,
                                       double width_hz) {
  if (width_hz <= 0.0) throw SimulationError("filter width must be positive");
  return apply_spectral_transfer(e, [=](double nu) {
    return std::abs(nu - center_offset_hz) <= width_hz / 2.0 ? complexd(1.0, 0.0)
                                                             : complexd(0.0, 0.0);
  });
}

// Photon number inside a spectral band without modifying the envelope.
inline double photons_in_band(const ComplexEnvelope& e, double center_offset_hz,
                              double width_hz) {
  const auto f = to_frequency(e);
  double s = 0.0;
  for (int k = 0; k < e.grid.n_points; ++k) {
    if (std::abs(e.grid.freq_offset_at(k) - center_offset_hz) <= width_hz / 2.0)
      s += std::norm(f[k]);
  }
  return s * e.grid.df();
}

// Spectral intensity on an ascending frequency-offset axis (for spectra/CSV).
inline std::pair<std::vector<double>, std::vector<double>> spectral_intensity(
    const ComplexEnvelope& e) {
  const auto f = to_frequency(e);
  const int n = e.grid.n_points;
  std::vector<double> nu(n), intens(n);
  for (int k = 0; k < n; ++k) {
    const int src = (k + n / 2) % n;
    nu[k] = (k - n / 2) * e.grid.df();
    intens[k] = std::norm(f[src]);
  }
  return {std::move(nu), std::move(intens)};
}

// Third standardized central moment of |a(t)|^2; signature of cubic spectral
// phase building up on a stored pulse.
inline double temporal_skewness(const ComplexEnvelope& e) {
  double w = 0.0, m1 = 0.0;
  for (int i = 0; i < e.grid.n_points; ++i) {
    const double p = std::norm(e.samples[i]);
    w += p;
    m1 += p * e.grid.time_at(i);
  }
  if (w <= 0.0) throw UndefinedResultError("skewness undefined for zero envelope");
  m1 /= w;
  double m2 = 0.0, m3 = 0.0;
  for (int i = 0; i < e.grid.n_points; ++i) {
    const double p = std::norm(e.samples[i]);
    const double d = e.grid.time_at(i) - m1;
    m2 += p * d * d;
    m3 += p * d * d * d;
  }
  m2 /= w;
  m3 /= w;
  return m3 / std::pow(m2, 1.5);
}

// Jones-vector pair of envelopes sharing one grid and carrier.
struct PolarizedEnvelope {
  ComplexEnvelope x, y;

  static PolarizedEnvelope from_x(ComplexEnvelope ex) {
    PolarizedEnvelope p;
    p.y = ComplexEnvelope::zero(ex.grid, ex.carrier_hz);
    p.x = std::move(ex);
    return p;
  }

  double total_photon_number() const { return photon_number(x) + photon_number(y); }

  PolarizedEnvelope rotated(double theta) const {
    const double c = std::cos(theta), s = std::sin(theta);
    PolarizedEnvelope out;
    out.x = ComplexEnvelope::zero(x.grid, x.carrier_hz);
    out.y = ComplexEnvelope::zero(y.grid, y.carrier_hz);
    for (size_t i = 0; i < x.samples.size(); ++i) {
      out.x.samples[i] = c * x.samples[i] - s * y.samples[i];
      out.y.samples[i] = s * x.samples[i] + c * y.samples[i];
    }
    return out;
  }
};

}  // namespace fibercav
