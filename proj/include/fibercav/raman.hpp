#pragma once

#include <cmath>

#include "fibercav/bsfwm.hpp"
#include "fibercav/cavity.hpp"
#include "fibercav/common.hpp"

namespace fibercav {

// Spontaneous Raman scattering of the control pulses in the doped-silica
// fiber. The q control sits ~31 THz above the storage band and ~35 THz above
// the signal band, so it feeds noise into both; amounts are modeled at the
// mean-photon level (Poisson sampling happens at detection) and scale
// linearly with pump energy and collection bandwidth.
enum class RamanBand { thz31, thz35 };

struct RamanNoiseModel {
  double gain_31thz = 0.0;  // mean photons per nJ of q energy per 0.3 nm band
  double gain_35thz = 0.0;
  double occupancy_factor = 1.0;
  double time_correlated_fraction = 0.5;  // share of write noise that stays clock-correlated
};

inline double raman_detuning_hz(RamanBand band) {
  return band == RamanBand::thz31 ? 31e12 : 35e12;
}

inline double noise_mean_photons(const RamanNoiseModel& model, const ControlPulsePair& controls,
                                 RamanBand band, double filter_bandwidth_hz) {
  if (filter_bandwidth_hz <= 0.0) return 0.0;
  const double gain = band == RamanBand::thz31 ? model.gain_31thz : model.gain_35thz;
  const double nu_band = wavelength_to_frequency(controls.lambda_q) - raman_detuning_hz(band);
  const double ref_bw = wavelength_band_to_hz(0.3e-9, frequency_to_wavelength(nu_band));
  return gain * (controls.energy_q / 1e-9) * model.occupancy_factor *
         (filter_bandwidth_hz / ref_bw);
}

// Write-step noise scattered into the storage band; the clock-correlated
// share co-circulates with the stored signal and later shows up as the
// tau_r-dependent peak of the read delay scans.
inline CavityState inject_noise(CavityState state, const RamanNoiseModel& model,
                                const ControlPulsePair& write_controls) {
  state.stored_noise_mean += model.time_correlated_fraction *
                             noise_mean_photons(model, write_controls, RamanBand::thz31,
                                                wavelength_band_to_hz(0.3e-9, 1550e-9));
  return state;
}

// Read-step noise scattered directly into the signal collection band,
// independent of the read delay.
inline double readout_noise(const RamanNoiseModel& model, const ControlPulsePair& read_controls) {
  return noise_mean_photons(model, read_controls, RamanBand::thz35,
                            wavelength_band_to_hz(0.3e-9, 1585e-9));
}

}  // namespace fibercav
