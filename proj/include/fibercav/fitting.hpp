#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "fibercav/common.hpp"

namespace fibercav {

struct GaussianPeakFit {
  double amplitude = 0.0;  // height above baseline
  double center = 0.0;
  double fwhm = 0.0;
  double baseline = 0.0;
  double amplitude_err = 0.0;
  double center_err = 0.0;
  double fwhm_err = 0.0;
  double residual_rms = 0.0;
};

struct ExponentialFit {
  double amplitude = 0.0;
  double decay_constant = 0.0;  // 1/e constant in the x units
  double decay_constant_err = 0.0;
  double residual_rms = 0.0;
};

namespace detail {

// Dense least squares via Levenberg-Marquardt with forward-difference
// Jacobian. Model dimension here is <= 4 so normal equations are fine.
inline bool levenberg_marquardt(
    std::vector<double>& params,
    const std::function<void(const std::vector<double>&, std::vector<double>&)>& residuals,
    int n_res, std::vector<double>* param_var = nullptr) {
  const int np = static_cast<int>(params.size());
  std::vector<double> r(n_res), r_try(n_res);
  std::vector<std::vector<double>> jac(np, std::vector<double>(n_res));
  residuals(params, r);
  double chi2 = 0.0;
  for (double v : r) chi2 += v * v;
  double lambda = 1e-3;
  bool converged = false;

  for (int iter = 0; iter < 200 && !converged; ++iter) {
    for (int p = 0; p < np; ++p) {
      std::vector<double> pp = params;
      const double h = std::max(1e-9, 1e-7 * std::abs(pp[p]));
      pp[p] += h;
      residuals(pp, r_try);
      for (int i = 0; i < n_res; ++i) jac[p][i] = (r_try[i] - r[i]) / h;
    }
    // normal equations (J^T J + lambda diag) dp = -J^T r
    std::vector<std::vector<double>> a(np, std::vector<double>(np + 1, 0.0));
    for (int p = 0; p < np; ++p) {
      for (int q = 0; q < np; ++q)
        for (int i = 0; i < n_res; ++i) a[p][q] += jac[p][i] * jac[q][i];
      for (int i = 0; i < n_res; ++i) a[p][np] -= jac[p][i] * r[i];
    }
    bool improved = false;
    for (int attempt = 0; attempt < 8 && !improved; ++attempt) {
      auto m = a;
      for (int p = 0; p < np; ++p) m[p][p] *= (1.0 + lambda);
      // gaussian elimination
      bool singular = false;
      for (int col = 0; col < np; ++col) {
        int piv = col;
        for (int row = col + 1; row < np; ++row)
          if (std::abs(m[row][col]) > std::abs(m[piv][col])) piv = row;
        std::swap(m[col], m[piv]);
        if (std::abs(m[col][col]) < 1e-300) {
          singular = true;
          break;
        }
        for (int row = 0; row < np; ++row) {
          if (row == col) continue;
          const double f = m[row][col] / m[col][col];
          for (int c = col; c <= np; ++c) m[row][c] -= f * m[col][c];
        }
      }
      if (singular) return false;
      std::vector<double> trial = params;
      double step = 0.0;
      for (int p = 0; p < np; ++p) {
        const double dp = m[p][np] / m[p][p];
        trial[p] += dp;
        step += dp * dp;
      }
      residuals(trial, r_try);
      double chi2_try = 0.0;
      for (double v : r_try) chi2_try += v * v;
      if (chi2_try <= chi2) {
        improved = true;
        const double rel = (chi2 - chi2_try) / std::max(chi2, 1e-300);
        params = trial;
        r = r_try;
        chi2 = chi2_try;
        lambda = std::max(lambda * 0.3, 1e-12);
        if (rel < 1e-14 || step < 1e-24) converged = true;
      } else {
        lambda *= 10.0;
        if (lambda > 1e12) converged = true;  // stuck; accept current point
      }
    }
    if (!improved) break;
  }

  if (param_var) {
    // covariance from (J^T J)^-1 scaled by residual variance
    for (int p = 0; p < np; ++p) {
      std::vector<double> pp = params;
      const double h = std::max(1e-9, 1e-7 * std::abs(pp[p]));
      pp[p] += h;
      residuals(pp, r_try);
      for (int i = 0; i < n_res; ++i) jac[p][i] = (r_try[i] - r[i]) / h;
    }
    std::vector<std::vector<double>> jtj(np, std::vector<double>(2 * np, 0.0));
    for (int p = 0; p < np; ++p) {
      for (int q = 0; q < np; ++q)
        for (int i = 0; i < n_res; ++i) jtj[p][q] += jac[p][i] * jac[q][i];
      jtj[p][np + p] = 1.0;
    }
    for (int col = 0; col < np; ++col) {
      int piv = col;
      for (int row = col + 1; row < np; ++row)
        if (std::abs(jtj[row][col]) > std::abs(jtj[piv][col])) piv = row;
      std::swap(jtj[col], jtj[piv]);
      if (std::abs(jtj[col][col]) < 1e-300) {
        param_var->assign(np, 0.0);
        return true;
      }
      const double d = jtj[col][col];
      for (int c = 0; c < 2 * np; ++c) jtj[col][c] /= d;
      for (int row = 0; row < np; ++row) {
        if (row == col) continue;
        const double f = jtj[row][col];
        for (int c = 0; c < 2 * np; ++c) jtj[row][c] -= f * jtj[col][c];
      }
    }
    const double dof = std::max(1, n_res - np);
    const double s2 = chi2 / dof;
    param_var->resize(np);
    for (int p = 0; p < np; ++p) (*param_var)[p] = std::max(0.0, jtj[p][np + p] * s2);
  }
  return true;
}

}  // namespace detail

// Least-squares fit of y = baseline + A exp(-(x-c)^2 / (2 s^2)). Coordinates
// are normalized internally so the numeric Jacobian is well scaled for
// picosecond-range axes.
inline GaussianPeakFit fit_gaussian_peak(const std::vector<double>& x,
                                         const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 5)
    throw FitError("gaussian peak fit needs at least 5 points", 0.0);
  const int n = static_cast<int>(x.size());
  int imax = 0;
  double ymin = y[0], ymax = y[0];
  for (int i = 0; i < n; ++i) {
    if (y[i] > ymax) {
      ymax = y[i];
      imax = i;
    }
    ymin = std::min(ymin, y[i]);
  }
  if (!(ymax > ymin)) throw FitError("gaussian peak fit on a flat series", 0.0);
  const double x0 = x[imax];
  const double xs = std::max(std::abs(x[n - 1] - x[0]), 1e-300);
  const double ys = ymax - ymin;
  std::vector<double> u(n), v(n);
  for (int i = 0; i < n; ++i) {
    u[i] = (x[i] - x0) / xs;
    v[i] = (y[i] - ymin) / ys;
  }

  // crude width from half-max crossings for the seed
  int lo = imax, hi = imax;
  while (lo > 0 && v[lo] > 0.5) --lo;
  while (hi < n - 1 && v[hi] > 0.5) ++hi;
  double sigma0 = std::abs(u[hi] - u[lo]) / 2.355;
  if (sigma0 <= 0.0) sigma0 = 0.1;

  std::vector<double> p = {1.0, 0.0, sigma0, 0.0};  // amp, center, sigma, base
  auto residuals = [&](const std::vector<double>& q, std::vector<double>& r) {
    r.resize(n);
    for (int i = 0; i < n; ++i) {
      const double w = (u[i] - q[1]) / q[2];
      r[i] = q[3] + q[0] * std::exp(-0.5 * w * w) - v[i];
    }
  };
  std::vector<double> var;
  if (!detail::levenberg_marquardt(p, residuals, n, &var))
    throw FitError("gaussian peak fit did not converge", 1.0);

  std::vector<double> r;
  residuals(p, r);
  double rss = 0.0;
  for (double w : r) rss += w * w;

  GaussianPeakFit out;
  out.amplitude = p[0] * ys;
  out.center = x0 + p[1] * xs;
  out.fwhm = 2.354820045030949 * std::abs(p[2]) * xs;
  out.baseline = ymin + p[3] * ys;
  out.amplitude_err = std::sqrt(var[0]) * ys;
  out.center_err = std::sqrt(var[1]) * xs;
  out.fwhm_err = 2.354820045030949 * std::sqrt(var[2]) * xs;
  out.residual_rms = std::sqrt(rss / n) * ys;
  return out;
}

// Least-squares fit of y = A exp(-x / tau) in linear space (log-linear seed).
inline ExponentialFit fit_exponential_decay(const std::vector<double>& x,
                                            const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3)
    throw FitError("exponential fit needs at least 3 points", 0.0);
  const int n = static_cast<int>(x.size());
  const double xs = std::max(std::abs(x[n - 1] - x[0]), 1e-300);
  double ys = 0.0;
  for (double v : y) ys = std::max(ys, std::abs(v));
  if (ys <= 0.0) throw FitError("exponential fit on an all-zero series", 0.0);

  // log-linear seed over the positive samples
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (int i = 0; i < n; ++i) {
    if (y[i] <= 0.0) continue;
    const double ly = std::log(y[i] / ys);
    sx += x[i] / xs;
    sy += ly;
    sxx += (x[i] / xs) * (x[i] / xs);
    sxy += (x[i] / xs) * ly;
    ++m;
  }
  if (m < 3) throw FitError("exponential fit needs at least 3 positive samples", 0.0);
  const double det = m * sxx - sx * sx;
  double slope = det != 0.0 ? (m * sxy - sx * sy) / det : -1.0;
  const double intercept = (sy - slope * sx) / m;
  if (slope >= 0.0) slope = -1e-6;  // decay expected; keep the seed sane

  std::vector<double> p = {std::exp(intercept), -1.0 / slope};
  auto residuals = [&](const std::vector<double>& q, std::vector<double>& r) {
    r.resize(n);
    for (int i = 0; i < n; ++i) r[i] = q[0] * std::exp(-(x[i] / xs) / q[1]) - y[i] / ys;
  };
  std::vector<double> var;
  if (!detail::levenberg_marquardt(p, residuals, n, &var))
    throw FitError("exponential fit did not converge", 1.0);
  std::vector<double> r;
  residuals(p, r);
  double rss = 0.0;
  for (double w : r) rss += w * w;

  ExponentialFit out;
  out.amplitude = p[0] * ys;
  out.decay_constant = p[1] * xs;
  out.decay_constant_err = std::sqrt(var[1]) * xs;
  out.residual_rms = std::sqrt(rss / n) * ys;
  return out;
}

// Location of the dominant oscillation period in a decaying series: the
// series is flattened by its exponential fit, then scanned with a dense
// periodogram. Returns the period in x units.
inline double dominant_period(const std::vector<double>& x, const std::vector<double>& y) {
  const auto env = fit_exponential_decay(x, y);
  const int n = static_cast<int>(x.size());
  std::vector<double> resid(n);
  for (int i = 0; i < n; ++i) {
    const double e = env.amplitude * std::exp(-x[i] / env.decay_constant);
    resid[i] = e > 0.0 ? y[i] / e - 1.0 : 0.0;
  }
  const double span = x.back() - x.front();
  double best_p = 0.0, best_pow = -1.0;
  for (double period = 2.5; period <= span; period *= 1.005) {
    double cs = 0.0, sn = 0.0;
    for (int i = 0; i < n; ++i) {
      const double ph = 2.0 * constants::pi * x[i] / period;
      cs += resid[i] * std::cos(ph);
      sn += resid[i] * std::sin(ph);
    }
    const double p2 = cs * cs + sn * sn;
    if (p2 > best_pow) {
      best_pow = p2;
      best_p = period;
    }
  }
  return best_p;
}

}  // namespace fibercav
