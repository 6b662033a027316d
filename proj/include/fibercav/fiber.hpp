#pragma once

#include <cmath>

#include "fibercav/common.hpp"

namespace fibercav {

// Single-mode fiber dispersion around the zero-dispersion frequency, pure
// third-order model: beta1(w) = beta1_zd + beta3/2 (w - w_zd)^2. Signal/control
// pairs placed symmetrically about the zero-dispersion frequency are then
// group-velocity matched by construction.
struct FiberParams {
  double length = 5.08;               // m
  double lambda_zd = 1435e-9;         // m
  double dispersion_slope = 39.3;     // s/m^3 (dD/dlambda at lambda_zd)
  double gamma_nl = 6.0e-4;           // 1/(W m)
  double loss_db_per_m = 0.0;
  double n_group_ref = 1.4662;        // group index at lambda_zd

  double omega_zd() const {
    return 2.0 * constants::pi * wavelength_to_frequency(lambda_zd);
  }

  // beta3 from the dispersion slope: S0 = (2 pi c / lambda_zd^2)^2 * beta3
  double beta3() const {
    const double k = 2.0 * constants::pi * constants::c_light / (lambda_zd * lambda_zd);
    return dispersion_slope / (k * k);
  }

  // group slowness relative to the zero-dispersion frequency, s/m
  double beta1_rel(double nu) const {
    const double dw = 2.0 * constants::pi * nu - omega_zd();
    return 0.5 * beta3() * dw * dw;
  }

  double beta2(double nu) const {
    const double dw = 2.0 * constants::pi * nu - omega_zd();
    return beta3() * dw;
  }

  double group_index(double nu) const {
    return n_group_ref + constants::c_light * beta1_rel(nu);
  }

  double group_delay_over_length(double nu) const {
    return length * group_index(nu) / constants::c_light;
  }

  double amplitude_loss_factor(double dist) const {
    return db_to_amplitude_factor(loss_db_per_m * dist);
  }
};

// |difference of group delays| accumulated over the fiber length.
inline double group_walkoff(const FiberParams& fiber, double lambda_a, double lambda_b) {
  const double b1a = fiber.beta1_rel(wavelength_to_frequency(lambda_a));
  const double b1b = fiber.beta1_rel(wavelength_to_frequency(lambda_b));
  return std::abs(b1a - b1b) * fiber.length;
}

}  // namespace fibercav
