#pragma once

// Test functions on [0,1]^{d1+d2} with closed-form parametric integrals, and
// L_q(D1) error measurement of algorithm outputs.

#include "paramint/multilevel.hpp"
#include "paramint/partition.hpp"
#include "paramint/problem.hpp"
#include "paramint/rng.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace paramint {

using ScalarField = std::function<double(std::span<const double>)>;

struct TestInstance {
  std::string label;
  int d1 = 1;
  int d2 = 1;
  ScalarField eval;     // f(s, t)
  ScalarField exact_S;  // (Sf)(s)
  std::string note;

  double operator()(std::span<const double> x) const { return eval(x); }
};

/// f(s,t) = prod cos(pi s_a) prod sin(pi t_b), Sf(s) = prod cos(pi s_a) (2/pi)^{d2}.
inline TestInstance smooth_instance(int d1, int d2) {
  TestInstance ti;
  ti.label = "smooth";
  ti.d1 = d1;
  ti.d2 = d2;
  ti.eval = [d1, d2](std::span<const double> x) {
    double v = 1.0;
    for (int a = 0; a < d1; ++a) v *= std::cos(std::numbers::pi * x[a]);
    for (int b = 0; b < d2; ++b) v *= std::sin(std::numbers::pi * x[d1 + b]);
    return v;
  };
  const double w = std::pow(2.0 / std::numbers::pi, d2);
  ti.exact_S = [d1, w](std::span<const double> s) {
    double v = w;
    for (int a = 0; a < d1; ++a) v *= std::cos(std::numbers::pi * s[a]);
    return v;
  };
  ti.note = "C-infinity; in every W_p^r after scaling";
  return ti;
}

inline TestInstance zero_instance(int d1, int d2) {
  return {"zero", d1, d2, [](std::span<const double>) { return 0.0; }, [](std::span<const double>) { return 0.0; },
          "zero function"};
}

/// C-infinity bump exp(-1/(x(1-x))) on (0,1), zero outside.
inline double bump1(double x) {
  if (!(x > 0.0 && x < 1.0)) return 0.0;
  return std::exp(-1.0 / (x * (1.0 - x)));
}

inline double bump(std::span<const double> x) {
  double v = 1.0;
  for (double c : x) {
    v *= bump1(c);
    if (v == 0.0) return 0.0;
  }
  return v;
}

/// Integral of bump1 over [0,1].
inline double bump_integral() {
  static const double tau = [] {
    boost::math::quadrature::tanh_sinh<double> q;
    return q.integrate([](double x) { return bump1(x); }, 0.0, 1.0);
  }();
  return tau;
}

enum class SignLayout {
  dense,     // iid +-1 on every cell
  heavy_row  // one random parameter row with +-N1^{1/p}, zero elsewhere
};

/// Coefficients g on the level-L grid, N1 = 2^{d1 L} parameter rows times
/// N2 = 2^{d2 L} columns, normalized to ||g||_{L_p^{N1,N2}} = 1.
struct SignTensor {
  int level = 1;
  int d1 = 1, d2 = 1;
  SignLayout layout = SignLayout::dense;
  std::int64_t heavy = 0;      // heavy row index
  double height = 1.0;         // entry magnitude
  std::vector<std::int8_t> s;  // dense: N1*N2 signs; heavy_row: N2 signs

  std::int64_t rows() const { return cell_count(level, d1); }
  std::int64_t cols() const { return cell_count(level, d2); }

  double operator()(std::int64_t i1, std::int64_t i2) const {
    if (layout == SignLayout::dense) return s[static_cast<std::size_t>(i1 * cols() + i2)];
    return i1 == heavy ? height * s[static_cast<std::size_t>(i2)] : 0.0;
  }

  double row_mean(std::int64_t i1) const {
    double acc = 0.0;
    for (std::int64_t i2 = 0; i2 < cols(); ++i2) acc += (*this)(i1, i2);
    return acc / static_cast<double>(cols());
  }
};

inline SignTensor random_signs(int level, int d1, int d2, SignLayout layout, const Exponent& p, Rng& rng) {
  if (level < 1) throw std::invalid_argument("bump level must be >= 1");
  SignTensor g;
  g.level = level;
  g.d1 = d1;
  g.d2 = d2;
  g.layout = layout;
  auto sign = [&rng] { return static_cast<std::int8_t>((rng() >> 63) ? 1 : -1); };
  if (layout == SignLayout::dense) {
    g.s.resize(static_cast<std::size_t>(g.rows() * g.cols()));
  } else {
    std::uniform_int_distribution<std::int64_t> row(0, g.rows() - 1);
    g.heavy = row(rng);
    g.height = p.is_infinite() ? 1.0 : std::pow(static_cast<double>(g.rows()), to_double(p.inv()));
    g.s.resize(static_cast<std::size_t>(g.cols()));
  }
  for (auto& v : g.s) v = sign();
  return g;
}

/// f = amplitude 2^{-r L} Gamma_L g, Gamma_L g = sum_i g(i) psi(2^L x - cell offset).
inline TestInstance bump_instance(const SignTensor& g, int r, double amplitude = 1.0) {
  auto shared = std::make_shared<const SignTensor>(g);
  const double scale = amplitude * std::ldexp(1.0, -r * g.level);
  const int d1 = g.d1, d2 = g.d2, level = g.level;
  TestInstance ti;
  ti.label = g.layout == SignLayout::dense ? "bump" : "bump_heavy_row";
  ti.d1 = d1;
  ti.d2 = d2;
  ti.eval = [shared, scale, d1, d2, level](std::span<const double> x) {
    double u[kMaxDim];
    const std::int64_t i1 = detail::to_local(level, x.first(d1), {u, static_cast<std::size_t>(d1)});
    const std::int64_t i2 = detail::to_local(level, x.subspan(d1, d2), {u + d1, static_cast<std::size_t>(d2)});
    const double c = (*shared)(i1, i2);
    if (c == 0.0) return 0.0;
    return scale * c * bump({u, static_cast<std::size_t>(d1 + d2)});
  };
  // S psi_{L,(i1,i2)}(s) = tau^{d2} 2^{-d2 L} psi^{(1)}_{L,i1}(s)
  const double tw = std::pow(bump_integral(), d2);
  std::vector<double> means(static_cast<std::size_t>(g.rows()), 0.0);
  for (std::int64_t i1 = 0; i1 < g.rows(); ++i1) {
    if (g.layout == SignLayout::heavy_row && i1 != g.heavy) continue;
    means[static_cast<std::size_t>(i1)] = g.row_mean(i1);
  }
  ti.exact_S = [means = std::move(means), scale, tw, level](std::span<const double> s) {
    double u[kMaxDim];
    const std::int64_t i1 = detail::to_local(level, s, {u, s.size()});
    const double m = means[static_cast<std::size_t>(i1)];
    if (m == 0.0) return 0.0;
    return scale * tw * m * bump({u, s.size()});
  };
  ti.note = "level " + std::to_string(level) + ", ||g||_p = 1, bounded W_p^r norm";
  return ti;
}

// ------------------------------------------------------------------ errors

struct LqError {
  double value = 0.0;
  double coarse = 0.0;         // same rule at half resolution
  bool under_resolved = false; // |value - coarse| > 5% of value
};

namespace detail {

template <class G>
double grid_norm(const G& diff, int d1, std::int64_t res, const Exponent& q) {
  std::int64_t total = 1;
  for (int a = 0; a < d1; ++a) total *= res;
  double s[kMaxDim];
  std::int64_t idx[kMaxDim] = {};
  const bool inf = q.is_infinite();
  const double qv = inf ? 1.0 : q.value();
  // running maximum `scale` with the q-sum kept relative to it
  double acc = 0.0, scale = 0.0;
  for (std::int64_t k = 0; k < total; ++k) {
    std::int64_t rest = k;
    for (int a = d1 - 1; a >= 0; --a) {
      idx[a] = rest % res;
      rest /= res;
      s[a] = (static_cast<double>(idx[a]) + 0.5) / static_cast<double>(res);
    }
    const double v = std::abs(diff(std::span<const double>(s, static_cast<std::size_t>(d1))));
    if (v == 0.0) continue;
    if (v > scale) {
      if (!inf) acc = acc * std::pow(scale / v, qv) + 1.0;
      scale = v;
    } else if (!inf) {
      acc += std::pow(v / scale, qv);
    }
  }
  if (inf || scale == 0.0) return scale;
  return scale * std::pow(acc / static_cast<double>(total), 1.0 / qv);
}

}  // namespace detail

/// ||Sf - out||_{L_q(D1)} by the composite midpoint rule (grid max for
/// q = inf) with `resolution` points per axis, at least 2^{finest + 2}.
inline LqError lq_error(const MultilevelOutput& out, const ScalarField& exact, const Exponent& q,
                        std::int64_t resolution) {
  const std::int64_t need = std::int64_t{4} << out.finest_level();
  if (resolution < need) {
    throw std::invalid_argument("resolution " + std::to_string(resolution) + " below 2^{l+2} = " +
                                std::to_string(need));
  }
  auto diff = [&](std::span<const double> s) { return exact(s) - out(s); };
  LqError e;
  e.value = detail::grid_norm(diff, out.d1, resolution, q);
  e.coarse = detail::grid_norm(diff, out.d1, resolution / 2, q);
  e.under_resolved = std::abs(e.value - e.coarse) > 0.05 * e.value;
  return e;
}

/// Default grid resolution for an output: 2^{finest + 3} per axis, so the
/// half-resolution comparison still has four points per finest cell.
inline std::int64_t default_resolution(const MultilevelOutput& out) { return std::int64_t{8} << out.finest_level(); }

}  // namespace paramint
