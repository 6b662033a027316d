#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace fibercav {

using complexd = std::complex<double>;

namespace constants {
inline constexpr double c_light = 299792458.0;          // m/s
inline constexpr double pi = 3.141592653589793238462643;
// FWHM(intensity, time) * FWHM(intensity, frequency) for a transform-limited Gaussian
inline constexpr double gaussian_tbp = 0.441271200305303;  // = 2 ln2 / pi
}  // namespace constants

inline double db_to_power_factor(double db) { return std::pow(10.0, -db / 10.0); }
inline double db_to_amplitude_factor(double db) { return std::pow(10.0, -db / 20.0); }

inline double wavelength_to_frequency(double lambda_m) { return constants::c_light / lambda_m; }
inline double frequency_to_wavelength(double nu_hz) { return constants::c_light / nu_hz; }

// Bandwidth conversion at a given carrier: |dnu| = c dlambda / lambda^2
inline double wavelength_band_to_hz(double dlambda_m, double lambda_m) {
  return constants::c_light * dlambda_m / (lambda_m * lambda_m);
}

struct SimulationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GridResolutionError : SimulationError {
  using SimulationError::SimulationError;
};

// Zero-energy input to width/overlap/depletion style queries.
struct UndefinedResultError : SimulationError {
  using SimulationError::SimulationError;
};

struct OutOfBandError : SimulationError {
  using SimulationError::SimulationError;
};

struct CalibrationError : SimulationError {
  CalibrationError(const std::string& msg, double achieved_r, double achieved_bw)
      : SimulationError(msg), best_reflectivity(achieved_r), best_bandwidth(achieved_bw) {}
  double best_reflectivity = 0.0;
  double best_bandwidth = 0.0;
};

struct IntegrationAccuracyError : SimulationError {
  using SimulationError::SimulationError;
};

struct FitError : SimulationError {
  FitError(const std::string& msg, double residual_norm)
      : SimulationError(msg), residual(residual_norm) {}
  double residual = 0.0;
};

// Validation failure naming the offending config field.
struct ConfigurationError : SimulationError {
  ConfigurationError(const std::string& field_path, const std::string& msg)
      : SimulationError(field_path + ": " + msg), field(field_path) {}
  std::string field;
};

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace fibercav
