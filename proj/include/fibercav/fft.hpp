#pragma once

#include <vector>

#include <unsupported/Eigen/FFT>

#include "fibercav/common.hpp"

namespace fibercav {

namespace detail {
inline Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> fft;  // caches plans per size
  return fft;
}
}  // namespace detail

// Unnormalized DFT / DFT^-1 (inverse includes the 1/N factor), natural FFT
// ordering (DC first). The unitary scaling lives in ComplexEnvelope.
inline std::vector<complexd> fft_forward(const std::vector<complexd>& x) {
  std::vector<complexd> out;
  detail::fft_engine().fwd(out, x);
  return out;
}

inline std::vector<complexd> fft_inverse(const std::vector<complexd>& x) {
  std::vector<complexd> out;
  detail::fft_engine().inv(out, x);
  return out;
}

}  // namespace fibercav
