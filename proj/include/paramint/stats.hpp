#pragma once

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace paramint {

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double band_lo = 0.0;  // 95% confidence band for the slope
  double band_hi = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = a + b x with a Student-t 95% band for b.
inline SlopeFit ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("ols_slope needs >= 2 paired points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("ols_slope: x values are all equal");
  SlopeFit f;
  f.points = x.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - f.intercept - f.slope * x[i];
      rss += e * e;
    }
    f.stderr_slope = std::sqrt(rss / (n - 2.0) / sxx);
    const boost::math::students_t dist(n - 2.0);
    const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
    f.band_lo = f.slope - t * f.stderr_slope;
    f.band_hi = f.slope + t * f.stderr_slope;
  } else {
    f.band_lo = f.band_hi = f.slope;
  }
  return f;
}

/// Fit on (log2 x, log2 y) over the points with x >= the median x, and at
/// least the two largest x.
inline SlopeFit loglog_upper_half(std::span<const double> x, std::span<const double> y) {
  std::vector<double> xs(x.begin(), x.end());
  std::vector<double> sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  double median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  if (m >= 2) median = std::min(median, sorted[m - 2]);
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] >= median) {
      lx.push_back(std::log2(x[i]));
      ly.push_back(std::log2(y[i]));
    }
  }
  return ols_slope(lx, ly);
}

struct RmsEstimate {
  double rms = 0.0;
  double stderr_rms = 0.0;  // jackknife
};

/// (mean e_i^w)^{1/w} with its leave-one-out jackknife standard error.
inline RmsEstimate rms_jackknife(std::span<const double> errors, double w = 2.0) {
  if (errors.empty()) throw std::invalid_argument("rms_jackknife of no samples");
  const auto n = static_cast<double>(errors.size());
  double total = 0.0;
  for (double e : errors) total += std::pow(std::abs(e), w);
  RmsEstimate r;
  r.rms = std::pow(total / n, 1.0 / w);
  if (errors.size() < 2) return r;
  std::vector<double> loo(errors.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    const double rest = std::max(0.0, total - std::pow(std::abs(errors[i]), w));
    loo[i] = std::pow(rest / (n - 1.0), 1.0 / w);
    mean += loo[i] / n;
  }
  double ss = 0.0;
  for (double v : loo) ss += (v - mean) * (v - mean);
  r.stderr_rms = std::sqrt((n - 1.0) / n * ss);
  return r;
}

}  // namespace paramint
