#pragma once

#include <cmath>
#include <vector>

#include "fibercav/common.hpp"
#include "fibercav/fiber.hpp"
#include "fibercav/grid.hpp"

namespace fibercav {

// Write/read control pulse pair p and q. The p-q frequency splitting sets the
// signal-to-target splitting of the Bragg-scattering process by construction.
struct ControlPulsePair {
  double lambda_p = 1312e-9;   // m
  double lambda_q = 1337e-9;   // m
  double duration_fwhm = 10e-12;  // s, intensity FWHM of each control
  double energy_p = 1.7e-9;    // J, in-fiber
  double energy_q = 1.7e-9;    // J
  double delay = 0.0;          // s, arrival of the pair center (tau_w or tau_r)
  double relative_phase = 0.0;  // rad, phase of p relative to q seen by the conversion
  complexd jones_x{1.0, 0.0};  // control polarization axis
  complexd jones_y{0.0, 0.0};

  double splitting_hz() const {
    return wavelength_to_frequency(lambda_p) - wavelength_to_frequency(lambda_q);
  }

  double peak_power_p() const { return peak_power(energy_p); }
  double peak_power_q() const { return peak_power(energy_q); }

 private:
  double peak_power(double energy) const {
    return energy * 2.0 * std::sqrt(std::log(2.0) / constants::pi) / duration_fwhm;
  }
};

struct ConvertOptions {
  int n_steps = 200;
  double delta_beta = 0.0;   // rad/m phase mismatch of the four-wave process
  double xpm_scale = 1.0;    // scale on the 2 gamma (Pp + Pq) cross-phase term
  bool check_conservation = true;
};

struct ConvertResult {
  ComplexEnvelope signal_out;  // at the signal carrier
  ComplexEnvelope stored_out;  // at the target carrier
};

// Two-mode Bragg-scattering conversion along the fiber, z-stepped in the
// retarded frame of the signal. Controls are undepleted classical Gaussians
// sliding by their group walkoff; each step applies a split linear operator
// (relative group slip + GVD + loss) and an exact local two-mode rotation
//   kappa(z,t) = 2 gamma sqrt(Pp Pq),   XPM rate = 2 gamma (Pp + Pq),
// so photon number in s+t is conserved exactly in the lossless model.
inline ConvertResult convert(const ComplexEnvelope& signal_in, const ComplexEnvelope& stored_in,
                             const ControlPulsePair& controls, const FiberParams& fiber,
                             const ConvertOptions& opt = {}) {
  if (opt.n_steps < 8) throw IntegrationAccuracyError("convert needs at least 8 z-steps");
  const ComplexEnvelope* ref = !signal_in.empty() ? &signal_in : &stored_in;
  if (ref->empty()) throw SimulationError("convert needs at least one populated envelope");
  const TimeFrequencyGrid grid = ref->grid;

  const double nu_s = !signal_in.empty()
                          ? signal_in.carrier_hz
                          : stored_in.carrier_hz - controls.splitting_hz();
  const double nu_t = nu_s + controls.splitting_hz();
  if (!stored_in.empty() && !signal_in.empty()) {
    ensure_same_grid(signal_in, stored_in);
    if (std::abs((stored_in.carrier_hz - signal_in.carrier_hz) - controls.splitting_hz()) >
        1e-3 * std::abs(controls.splitting_hz()))
      throw SimulationError("stored/signal carriers inconsistent with the control splitting");
  }

  ComplexEnvelope a_s = !signal_in.empty() ? signal_in : ComplexEnvelope::zero(grid, nu_s);
  ComplexEnvelope a_t = !stored_in.empty() ? stored_in : ComplexEnvelope::zero(grid, nu_t);
  const double n_in = photon_number(a_s) + photon_number(a_t);

  const int n = grid.n_points;
  const double dz = fiber.length / opt.n_steps;
  const double b1_ref = fiber.beta1_rel(nu_s);
  const double d_t = fiber.beta1_rel(nu_t) - b1_ref;
  const double d_p = fiber.beta1_rel(wavelength_to_frequency(controls.lambda_p)) - b1_ref;
  const double d_q = fiber.beta1_rel(wavelength_to_frequency(controls.lambda_q)) - b1_ref;
  const double b2_s = fiber.beta2(nu_s);
  const double b2_t = fiber.beta2(nu_t);

  // per-mode linear phase for one full step (time convention exp(+i Omega t):
  // a slip of d means spectral phase -i d Omega z)
  const double loss_amp = fiber.amplitude_loss_factor(dz);
  std::vector<complexd> lin_s(n), lin_t(n), lin_s_half(n), lin_t_half(n);
  for (int k = 0; k < n; ++k) {
    const double w = 2.0 * constants::pi * grid.freq_offset_at(k);
    const double ph_s = 0.5 * b2_s * w * w * dz;
    const double ph_t = (-d_t * w + 0.5 * b2_t * w * w) * dz;
    lin_s[k] = std::polar(loss_amp, ph_s);
    lin_t[k] = std::polar(loss_amp, ph_t);
    lin_s_half[k] = std::polar(std::sqrt(loss_amp), 0.5 * ph_s);
    lin_t_half[k] = std::polar(std::sqrt(loss_amp), 0.5 * ph_t);
  }

  const double p_pk = controls.peak_power_p();
  const double q_pk = controls.peak_power_q();
  const double tau2 = controls.duration_fwhm * controls.duration_fwhm;
  const double g4ln2 = 4.0 * std::log(2.0);

  auto linear_step = [&](const std::vector<complexd>& hs, const std::vector<complexd>& ht) {
    auto fs = to_frequency(a_s);
    auto ft = to_frequency(a_t);
    for (int k = 0; k < n; ++k) {
      fs[k] *= hs[k];
      ft[k] *= ht[k];
    }
    a_s = from_frequency(grid, nu_s, std::move(fs));
    a_t = from_frequency(grid, nu_t, std::move(ft));
  };

  auto nonlinear_step = [&](double z_mid) {
    const double tp = controls.delay + d_p * z_mid;
    const double tq = controls.delay + d_q * z_mid;
    const double psi = opt.delta_beta * z_mid + controls.relative_phase;
    const complexd up = std::polar(1.0, psi);
    const complexd i_up(-up.imag(), up.real());        // i e^{+i psi}
    const complexd i_dn(std::sin(psi), std::cos(psi));  // i e^{-i psi}
    for (int i = 0; i < n; ++i) {
      const double t = grid.time_at(i);
      const double pp = p_pk * std::exp(-g4ln2 * (t - tp) * (t - tp) / tau2);
      const double pq = q_pk * std::exp(-g4ln2 * (t - tq) * (t - tq) / tau2);
      const double theta = 2.0 * fiber.gamma_nl * std::sqrt(pp * pq) * dz;
      const double xpm = opt.xpm_scale * 2.0 * fiber.gamma_nl * (pp + pq) * dz;
      const complexd rot = std::polar(1.0, xpm);
      const double ct = std::cos(theta), st = std::sin(theta);
      const complexd s0 = a_s.samples[i], t0 = a_t.samples[i];
      a_s.samples[i] = rot * (ct * s0 + i_up * st * t0);
      a_t.samples[i] = rot * (i_dn * st * s0 + ct * t0);
    }
  };

  linear_step(lin_s_half, lin_t_half);
  for (int step = 0; step < opt.n_steps; ++step) {
    nonlinear_step((step + 0.5) * dz);
    if (step + 1 < opt.n_steps) linear_step(lin_s, lin_t);
  }
  linear_step(lin_s_half, lin_t_half);

  if (opt.check_conservation && fiber.loss_db_per_m == 0.0 && n_in > 0.0) {
    const double n_out = photon_number(a_s) + photon_number(a_t);
    if (std::abs(n_out - n_in) > 1e-4 * n_in)
      throw IntegrationAccuracyError("photon number not conserved; increase n_steps");
  }

  return {std::move(a_s), std::move(a_t)};
}

// 1 - (filtered photons out) / (filtered photons in), both through a top-hat
// collection filter centered on the input carrier.
inline double depletion_fraction(const ComplexEnvelope& signal_in,
                                 const ComplexEnvelope& signal_out,
                                 double collection_filter_bandwidth_hz) {
  if (collection_filter_bandwidth_hz <= 0.0)
    throw SimulationError("collection filter bandwidth must be positive");
  const double in = photons_in_band(signal_in, 0.0, collection_filter_bandwidth_hz);
  if (in <= 0.0) throw UndefinedResultError("depletion undefined for zero filtered input");
  const double out = photons_in_band(signal_out, 0.0, collection_filter_bandwidth_hz);
  return 1.0 - out / in;
}

}  // namespace fibercav
