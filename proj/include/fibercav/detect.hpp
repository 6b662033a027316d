#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fibercav/common.hpp"
#include "fibercav/fitting.hpp"
#include "fibercav/grid.hpp"
#include "fibercav/rng.hpp"

namespace fibercav {

// Time-binned counts accumulated over a trial batch (SNSPD-style counting
// with 100 ps bins).
struct DetectionRecord {
  double bin_width = 100e-12;
  std::vector<long long> counts;
  long long trials = 0;
  int channel = 0;

  double rate(size_t bin) const {
    return trials > 0 ? static_cast<double>(counts.at(bin)) / trials : 0.0;
  }
  size_t peak_bin() const {
    return std::distance(counts.begin(), std::max_element(counts.begin(), counts.end()));
  }
};

struct MetricReport {
  double efficiency = 0.0, efficiency_err = 0.0;
  double snr = 0.0, snr_err = 0.0;
  double spectral_fidelity = 0.0;
  double fitted_peak_fwhm = 0.0;
  double fitted_decay_constant = 0.0;
};

// Poisson-sampled counts per bin: counts_b ~ Poisson(trials * (mean_b * eta + dark)).
inline DetectionRecord detect_counts(const std::vector<double>& mean_photons_per_bin,
                                     double detector_efficiency, double dark_rate_per_bin,
                                     long long trials, std::uint64_t seed) {
  if (detector_efficiency < 0.0 || detector_efficiency > 1.0)
    throw SimulationError("detector efficiency must lie in [0, 1]");
  DetectionRecord rec;
  rec.trials = trials;
  rec.counts.resize(mean_photons_per_bin.size());
  Rng rng(seed);
  for (size_t b = 0; b < mean_photons_per_bin.size(); ++b) {
    const double mean = mean_photons_per_bin[b];
    if (mean < 0.0 || dark_rate_per_bin < 0.0)
      throw SimulationError("negative detection mean");
    rec.counts[b] = rng.poisson(trials * (mean * detector_efficiency + dark_rate_per_bin));
  }
  return rec;
}

inline DetectionRecord detect_counts(double mean_photons, double detector_efficiency,
                                     double dark_rate, long long trials, std::uint64_t seed) {
  return detect_counts(std::vector<double>{mean_photons}, detector_efficiency, dark_rate,
                       trials, seed);
}

struct RatioEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Retrieved-signal rate divided by the through-cavity baseline rate, at each
// record's peak bin, with Poisson error propagation. The three-record form
// subtracts the signal-off (noise) run first.
inline RatioEstimate memory_efficiency(const DetectionRecord& retrieved,
                                       const DetectionRecord& baseline) {
  if (baseline.trials <= 0 || retrieved.trials <= 0)
    throw UndefinedResultError("memory efficiency needs populated records");
  const auto kb = baseline.peak_bin();
  const auto kr = retrieved.peak_bin();
  const double rb = baseline.rate(kb);
  if (rb <= 0.0) throw UndefinedResultError("memory efficiency undefined for zero baseline");
  const double rr = retrieved.rate(kr);
  RatioEstimate out;
  out.value = rr / rb;
  const double cr = std::max<double>(1, retrieved.counts[kr]);
  const double cb = std::max<double>(1, baseline.counts[kb]);
  out.std_error = out.value * std::sqrt(1.0 / cr + 1.0 / cb);
  return out;
}

inline RatioEstimate memory_efficiency(const DetectionRecord& retrieved,
                                       const DetectionRecord& noise,
                                       const DetectionRecord& baseline) {
  if (noise.counts.size() != retrieved.counts.size())
    throw SimulationError("noise record shape mismatch");
  DetectionRecord sub = retrieved;
  for (size_t b = 0; b < sub.counts.size(); ++b) {
    const double n_rate = noise.rate(b);
    sub.counts[b] = std::max<long long>(
        0, sub.counts[b] - static_cast<long long>(std::llround(n_rate * retrieved.trials)));
  }
  return memory_efficiency(sub, baseline);
}

// F = int sqrt(I_in I_out) / sqrt(int I_in * int I_out) on a common axis.
// Negative samples (from noise subtraction) are clamped to zero.
inline double spectral_fidelity(const std::vector<double>& intensity_in,
                                const std::vector<double>& intensity_out) {
  if (intensity_in.size() != intensity_out.size() || intensity_in.empty())
    throw SimulationError("spectral fidelity needs equal-length spectra");
  double cross = 0.0, a = 0.0, b = 0.0;
  for (size_t i = 0; i < intensity_in.size(); ++i) {
    const double x = std::max(0.0, intensity_in[i]);
    const double y = std::max(0.0, intensity_out[i]);
    cross += std::sqrt(x * y);
    a += x;
    b += y;
  }
  if (a <= 0.0 || b <= 0.0)
    throw UndefinedResultError("spectral fidelity undefined for zero-integral spectra");
  return cross / std::sqrt(a * b);
}

// Interpolating overload for spectra sampled on different wavelength axes.
inline double spectral_fidelity(const std::vector<double>& lambda_in,
                                const std::vector<double>& intensity_in,
                                const std::vector<double>& lambda_out,
                                const std::vector<double>& intensity_out) {
  std::vector<double> out_resampled(lambda_in.size(), 0.0);
  for (size_t i = 0; i < lambda_in.size(); ++i) {
    const double lam = lambda_in[i];
    if (lam <= lambda_out.front() || lam >= lambda_out.back()) continue;
    const auto it = std::upper_bound(lambda_out.begin(), lambda_out.end(), lam);
    const size_t j = std::distance(lambda_out.begin(), it);
    const double f = (lam - lambda_out[j - 1]) / (lambda_out[j] - lambda_out[j - 1]);
    out_resampled[i] = intensity_out[j - 1] * (1.0 - f) + intensity_out[j] * f;
  }
  return spectral_fidelity(intensity_in, out_resampled);
}

struct TwofoldPoint {
  double delay = 0.0;
  double normalized_twofolds = 0.0;  // N12 * trials / (N1 N2)
  double std_error = 0.0;
  long long n1 = 0, n2 = 0, n12 = 0;
};

// Phase-randomized interference of two coherent wavepackets on the two-element
// detector (equivalent to a beamsplitter feeding two binary click detectors).
// Incoherent background splits evenly between the elements. The normalized
// two-fold baseline is 1; bunching lifts the peak by up to |V|^2 / 2.
inline std::vector<TwofoldPoint> twofold_scan(const ComplexEnvelope& retrieved,
                                              const ComplexEnvelope& reference,
                                              double noise_mean,
                                              const std::vector<double>& delays,
                                              long long trials, std::uint64_t seed,
                                              double detector_efficiency = 1.0,
                                              double intensity_tolerance = 0.1) {
  const double mu_r = photon_number(retrieved);
  const double mu_f = photon_number(reference);
  if (mu_r <= 0.0 || mu_f <= 0.0)
    throw UndefinedResultError("twofold scan undefined for zero mean intensity");
  if (std::abs(mu_r - mu_f) > intensity_tolerance * std::max(mu_r, mu_f))
    throw SimulationError("twofold scan expects intensity-balanced inputs");

  std::vector<TwofoldPoint> out(delays.size());
  for (size_t d = 0; d < delays.size(); ++d) {
    const double v = std::abs(field_overlap(retrieved, reference, delays[d]));
    const double fringe = 2.0 * std::sqrt(mu_r * mu_f) * v;
    Rng rng(derive_seed(seed, d));
    long long n1 = 0, n2 = 0, n12 = 0;
    for (long long t = 0; t < trials; ++t) {
      const double phi = rng.uniform(0.0, 2.0 * constants::pi);
      const double n_tot = mu_r + mu_f + fringe * std::cos(phi) + noise_mean;
      const double mean_el = 0.5 * detector_efficiency * n_tot;
      const double p = 1.0 - std::exp(-mean_el);
      const bool c1 = rng.bernoulli(p);
      const bool c2 = rng.bernoulli(p);
      n1 += c1;
      n2 += c2;
      n12 += (c1 && c2);
    }
    auto& pt = out[d];
    pt.delay = delays[d];
    pt.n1 = n1;
    pt.n2 = n2;
    pt.n12 = n12;
    if (n1 > 0 && n2 > 0) {
      pt.normalized_twofolds =
          static_cast<double>(n12) * trials / (static_cast<double>(n1) * n2);
      if (n12 > 0)
        pt.std_error = pt.normalized_twofolds *
                       std::sqrt(1.0 / n12 + 1.0 / n1 + 1.0 / n2);
    }
  }
  return out;
}

}  // namespace fibercav
