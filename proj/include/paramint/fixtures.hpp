#pragma once

// Random polynomial and smooth test functions shared by tests and the self-test.

#include "paramint/partition.hpp"
#include "paramint/rng.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace paramint::fixtures {

/// Random polynomial with maximum coordinate degree `deg` in `dim` variables.
struct RandomPolynomial {
  int deg = 0;
  int dim = 1;
  std::vector<double> coeffs;  // monomials, last variable fastest

  RandomPolynomial(int degree, int d, Rng& rng) : deg(degree), dim(d) {
    std::size_t n = 1;
    for (int a = 0; a < d; ++a) n *= static_cast<std::size_t>(degree + 1);
    coeffs.resize(n);
    for (double& c : coeffs) c = 2.0 * uniform01(rng) - 1.0;
  }

  double operator()(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t m = 0; m < coeffs.size(); ++m) {
      std::size_t rest = m;
      double v = coeffs[m];
      for (int a = dim - 1; a >= 0; --a) {
        v *= std::pow(x[a], static_cast<double>(rest % (deg + 1)));
        rest /= deg + 1;
      }
      s += v;
    }
    return s;
  }
};

/// Smooth non-polynomial test function exp(sum_a c_a sin(w_a x_a + p_a)).
struct RandomSmooth {
  int dim = 1;
  double c[kMaxDim]{}, w[kMaxDim]{}, ph[kMaxDim]{};

  RandomSmooth(int d, Rng& rng) : dim(d) {
    for (int a = 0; a < d; ++a) {
      c[a] = 0.3 + 0.5 * uniform01(rng);
      w[a] = 1.0 + 4.0 * uniform01(rng);
      ph[a] = 6.0 * uniform01(rng);
    }
  }

  double operator()(std::span<const double> x) const {
    double e = 0.0;
    for (int a = 0; a < dim; ++a) e += c[a] * std::sin(w[a] * x[a] + ph[a]);
    return std::exp(e);
  }
};

inline Point random_point(int dim, Rng& rng) {
  Point x(dim);
  for (int a = 0; a < dim; ++a) x[a] = uniform01(rng);
  return x;
}

}  // namespace paramint::fixtures
