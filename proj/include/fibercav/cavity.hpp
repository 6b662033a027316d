#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "fibercav/bsfwm.hpp"
#include "fibercav/common.hpp"
#include "fibercav/fiber.hpp"
#include "fibercav/fitting.hpp"
#include "fibercav/grating.hpp"
#include "fibercav/grid.hpp"

namespace fibercav {

// Spliced-scenario effect: retargeting the read optical delay for later round
// trips shifts the free-space path, so the read energy coupled into the fiber
// falls off. Modeled as exponential in the accumulated path shift, calibrated
// to the endpoint (factor at trip `endpoint_trips`); the factor multiplies
// both control energies.
struct ReadCouplingDecay {
  bool enabled = false;
  double path_shift_per_trip = 187e-12;  // s of optical delay retune per trip
  double endpoint_factor = 1.0 / 3.0;
  int endpoint_trips = 11;

  double factor(long n) const {
    if (!enabled || n <= 1) return 1.0;
    const double rate = -std::log(endpoint_factor) / (endpoint_trips - 1);
    return std::exp(-rate * static_cast<double>(n - 1));
  }
};

struct CavityConfig {
  FiberParams fiber;
  GratingSpec grating_near_spec;  // z = 0 faces the cavity
  GratingSpec grating_far_spec;
  double splice_loss_db = 0.0;    // per pass; the splice is crossed twice per round trip
  double polarization_rotation_per_trip = 0.0;  // rad
  double polarization_rotation_phase = 0.0;     // rad applied at write
  double stretch_offset = 0.0;                  // m of added length
  double control_period_multiple = 0.0;         // s; nearest multiple of the control clock
  double tod_imbalance_fraction = 0.0;          // residual fraction of one grating's cubic phase
  double tod_fit_half_width = 150e9;            // Hz window for the cubic-phase fit
  double storage_carrier_hz = 0.0;
  double signal_carrier_hz = 0.0;
  TimeFrequencyGrid grid;
  ConvertOptions convert_options;
  ReadCouplingDecay read_coupling;

  // computed by finalize_cavity_config
  GratingResponse grating_near, grating_far;
  double residual_cubic_phase = 0.0;  // s^3 of extra cubic spectral phase per round trip

  double cavity_length() const { return fiber.length + stretch_offset; }

  double round_trip_time() const {
    return 2.0 * cavity_length() * fiber.group_index(storage_carrier_hz) /
           constants::c_light;
  }

  double timing_slip_per_trip() const {
    return control_period_multiple > 0.0 ? round_trip_time() - control_period_multiple : 0.0;
  }

  // power survival of a stored wavepacket per round trip at the carrier
  double survival_per_trip() const {
    const double r2 = grating_near.reflectivity_at(storage_carrier_hz) *
                      grating_far.reflectivity_at(storage_carrier_hz);
    const double splice = db_to_power_factor(2.0 * splice_loss_db);
    const double fiber_loss = db_to_power_factor(fiber.loss_db_per_m * 2.0 * fiber.length);
    return r2 * splice * fiber_loss;
  }
};

// Computes the grating responses over the grid's full Nyquist band around the
// storage carrier (so stored envelopes never leave the interpolation range)
// and freezes the residual-TOD phase from the near grating's fitted cubic.
inline void finalize_cavity_config(CavityConfig& cfg) {
  validate_grid(cfg.grid);
  if (cfg.storage_carrier_hz <= 0.0)
    throw SimulationError("cavity config needs a storage carrier");
  const double nyquist = cfg.grid.n_points * cfg.grid.df();
  const double nu_lo = cfg.storage_carrier_hz - 0.55 * nyquist;
  const double nu_hi = cfg.storage_carrier_hz + 0.55 * nyquist;
  const int n_samples = 2 * cfg.grid.n_points + 1;
  cfg.grating_near = grating_response(cfg.grating_near_spec, frequency_to_wavelength(nu_hi),
                                      frequency_to_wavelength(nu_lo), n_samples);
  cfg.grating_far = grating_response(cfg.grating_far_spec, frequency_to_wavelength(nu_hi),
                                     frequency_to_wavelength(nu_lo), n_samples);
  cfg.residual_cubic_phase = 0.0;
  if (cfg.tod_imbalance_fraction != 0.0) {
    cfg.residual_cubic_phase =
        cfg.tod_imbalance_fraction *
        fit_reflection_phase(cfg.grating_near, cfg.storage_carrier_hz, cfg.tod_fit_half_width)
            .cubic;
  }
}

struct CavityState {
  PolarizedEnvelope stored;      // at the storage carrier
  long round_trips = 0;
  double timing_offset = 0.0;    // round_trips x (round trip time - control period multiple)
  double stored_noise_mean = 0.0;  // mean in-band noise photons co-circulating
};

struct WriteResult {
  CavityState state;
  ComplexEnvelope transmitted;  // unconverted signal exiting the far end
};

namespace detail {

// One full round trip is FBG reflections, two fiber passes, two splice
// crossings and the loss/dispersion they carry; all are diagonal in frequency
// so they compose into a single transfer function. The frame removes the
// first-order group delay at the envelope carrier (absolute timing is tracked
// in CavityState::timing_offset).
inline ComplexEnvelope round_trip_transfer(const ComplexEnvelope& env, const CavityConfig& cfg) {
  const double two_l = 2.0 * cfg.cavity_length();
  const double b2 = cfg.fiber.beta2(env.carrier_hz);
  const double amp = db_to_amplitude_factor(2.0 * cfg.splice_loss_db) *
                     cfg.fiber.amplitude_loss_factor(two_l);
  auto f = to_frequency(env);
  for (int k = 0; k < env.grid.n_points; ++k) {
    const double off = env.grid.freq_offset_at(k);
    const double nu = env.carrier_hz + off;
    if (!cfg.grating_near.covers(nu))
      throw OutOfBandError("stored envelope leaves the computed grating band");
    const double w = 2.0 * constants::pi * off;
    const double phase = 0.5 * b2 * w * w * two_l + cfg.residual_cubic_phase * w * w * w;
    f[k] *= cfg.grating_near.reflection_at(nu) * cfg.grating_far.reflection_at(nu) *
            std::polar(amp, phase);
  }
  return from_frequency(env.grid, env.carrier_hz, std::move(f));
}

}  // namespace detail

inline CavityState round_trip(CavityState state, const CavityConfig& cfg) {
  state.stored.x = detail::round_trip_transfer(state.stored.x, cfg);
  state.stored.y = detail::round_trip_transfer(state.stored.y, cfg);
  if (cfg.polarization_rotation_per_trip != 0.0)
    state.stored = state.stored.rotated(cfg.polarization_rotation_per_trip);
  state.round_trips += 1;
  state.timing_offset += cfg.timing_slip_per_trip();
  state.stored_noise_mean *= cfg.survival_per_trip();
  return state;
}

// Write: the input transmits through the near grating (its carrier sits far
// outside the stopband), converts to the storage band over one fiber pass,
// and the converted part is trapped while the remnant exits the far end.
inline WriteResult write(const ComplexEnvelope& input, const ControlPulsePair& controls,
                         const CavityConfig& cfg) {
  const double nu_t = input.carrier_hz + controls.splitting_hz();
  if (std::abs(nu_t - cfg.storage_carrier_hz) > 1e-6 * cfg.storage_carrier_hz)
    throw ConfigurationError("controls", "control splitting does not map the signal onto the storage carrier");
  if (!cfg.grating_near.in_reflection_band(nu_t) || !cfg.grating_far.in_reflection_band(nu_t))
    throw ConfigurationError("storage_carrier", "conversion target falls outside the grating reflection band");
  if (cfg.grating_near.covers(input.carrier_hz) &&
      cfg.grating_near.in_reflection_band(input.carrier_hz))
    throw ConfigurationError("signal_carrier", "input carrier sits inside the grating stopband");

  auto conv = convert(input, {}, controls, cfg.fiber, cfg.convert_options);
  WriteResult out;
  out.transmitted = std::move(conv.signal_out);
  out.state.stored = PolarizedEnvelope::from_x(std::move(conv.stored_out));
  if (cfg.polarization_rotation_phase != 0.0)
    out.state.stored = out.state.stored.rotated(cfg.polarization_rotation_phase);
  return out;
}

// Read: converts the co-polarized stored component back to the signal band.
// controls.delay is the read timing relative to the control clock; the
// accumulated cavity/clock slip moves the stored pulse underneath it.
inline ComplexEnvelope read(const CavityState& state, const ControlPulsePair& controls,
                            const CavityConfig& cfg, double coupling_efficiency = 1.0) {
  const double jn = std::sqrt(std::norm(controls.jones_x) + std::norm(controls.jones_y));
  ComplexEnvelope co = ComplexEnvelope::zero(state.stored.x.grid, state.stored.x.carrier_hz);
  for (size_t i = 0; i < co.samples.size(); ++i)
    co.samples[i] = (std::conj(controls.jones_x) * state.stored.x.samples[i] +
                     std::conj(controls.jones_y) * state.stored.y.samples[i]) /
                    jn;

  ControlPulsePair eff = controls;
  const double f = cfg.read_coupling.factor(state.round_trips);
  eff.energy_p *= f;
  eff.energy_q *= f;
  eff.delay = controls.delay - state.timing_offset;

  auto conv = convert({}, co, eff, cfg.fiber, cfg.convert_options);
  ComplexEnvelope out = std::move(conv.signal_out);
  const double amp = std::sqrt(std::clamp(coupling_efficiency, 0.0, 1.0));
  for (auto& v : out.samples) v *= amp;
  return out;
}

// 1/e ringdown constant in round trips for a narrowband probe. Probes outside
// the reflection band escape in under one trip. The probe lives on a reduced
// grid so that wavelength scans across the band stay inside the computed
// response coverage.
inline double ringdown_lifetime(const CavityConfig& cfg, double probe_wavelength,
                                int max_trips = 400) {
  const double nu = wavelength_to_frequency(probe_wavelength);
  TimeFrequencyGrid probe_grid{512, cfg.grid.time_span, probe_wavelength};
  ComplexEnvelope probe =
      make_gaussian_pulse(probe_grid, PulseWidth::fwhm_duration(0.1 * probe_grid.time_span),
                          1.0, 0.0, nu);
  CavityState state;
  state.stored = PolarizedEnvelope::from_x(std::move(probe));

  std::vector<double> n_axis, energy;
  const double e0 = state.stored.total_photon_number();
  for (int n = 1; n <= max_trips; ++n) {
    state = round_trip(std::move(state), cfg);
    const double e = state.stored.total_photon_number();
    if (e <= 0.0) return 0.0;
    n_axis.push_back(static_cast<double>(n));
    energy.push_back(e);
    if (n == 1 && e < e0 * std::exp(-1.0)) return 1.0 / std::log(e0 / e);
    if (e < e0 * std::exp(-4.0) && n >= 8) break;
  }
  // log-linear fit; decay is exactly exponential for wavelength-flat loss
  const int m = static_cast<int>(n_axis.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < m; ++i) {
    const double ly = std::log(energy[i]);
    sx += n_axis[i];
    sy += ly;
    sxx += n_axis[i] * n_axis[i];
    sxy += n_axis[i] * ly;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  if (slope >= 0.0) return static_cast<double>(max_trips);
  return -1.0 / slope;
}

inline CavityConfig stretch(const CavityConfig& cfg, double delta_length) {
  if (std::abs(delta_length) > 5e-3)
    throw SimulationError("stretch limited to +-5 mm");
  CavityConfig out = cfg;
  out.stretch_offset += delta_length;
  return out;
}

}  // namespace fibercav
