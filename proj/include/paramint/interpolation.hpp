#pragma once

// Tensor-product Lagrange interpolation of maximum coordinate degree r - 1
// with a randomly shifted node grid, and the two-level detail operator.
//
//   P_{0,rho} f(t) = sum_k f(t_k + delta rho) phi_k(t - delta rho)
//                  = sum_j (sum_k a_jk(rho) f(t_k + delta rho)) phi_j(t)
//   P_{l,rho} f    = sum_i R_{li} P_{0,rho} E_{li} f
//   P'_{l,rho} f   = P_{l+1,rho} f - P_{l,rho} f
//
// Polynomials are kept in the Lagrange basis of the unshifted nodes.

#include "paramint/partition.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace paramint {

inline constexpr double kDefaultShiftMargin = 0.5;

class LagrangeBasis {
 public:
  LagrangeBasis() : LagrangeBasis(1, 1) {}

  LagrangeBasis(int r, int dim, double shift_margin = kDefaultShiftMargin)
      : r_(r), dim_(dim), margin_(shift_margin) {
    if (r < 1) throw std::invalid_argument("interpolation needs r >= 1");
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("dimension out of range");
    if (!(shift_margin > 0.0 && shift_margin < 1.0)) throw std::invalid_argument("shift margin must lie in (0,1)");
    kappa_ = 1;
    for (int a = 0; a < dim; ++a) kappa_ *= r;
    nodes_.resize(r);
    for (int a = 0; a < r; ++a) nodes_[a] = r == 1 ? 0.0 : a * (1.0 - shift_margin) / (r - 1);
    denom_.assign(r, 1.0);
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < r; ++b)
        if (b != a) denom_[a] *= nodes_[a] - nodes_[b];
    weights1_.resize(r);
    for (int a = 0; a < r; ++a) {
      weights1_[a] = boost::math::quadrature::gauss<double, 10>::integrate(
          [&](double x) { return phi1(a, x); }, 0.0, 1.0);
    }
  }

  int r() const { return r_; }
  int dim() const { return dim_; }
  int kappa() const { return kappa_; }
  double margin() const { return margin_; }
  const std::vector<double>& nodes1d() const { return nodes_; }

  /// One-dimensional basis function phi_a at x (any real x).
  double phi1(int a, double x) const {
    double v = 1.0;
    for (int b = 0; b < r_; ++b)
      if (b != a) v *= x - nodes_[b];
    return v / denom_[a];
  }

  void phi1_all(double x, double* out) const {
    for (int a = 0; a < r_; ++a) out[a] = phi1(a, x);
  }

  /// Per-axis node indices of multi-index k (last axis fastest).
  void digits(int k, int* out) const {
    for (int a = dim_ - 1; a >= 0; --a) {
      out[a] = k % r_;
      k /= r_;
    }
  }

  Point node(int k) const {
    int dg[kMaxDim];
    digits(k, dg);
    Point t(dim_);
    for (int a = 0; a < dim_; ++a) t[a] = nodes_[dg[a]];
    return t;
  }

  double phi(int k, std::span<const double> x) const {
    int dg[kMaxDim];
    digits(k, dg);
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) v *= phi1(dg[a], x[a]);
    return v;
  }

  /// All kappa basis values at x.
  void phi_all(std::span<const double> x, std::span<double> out) const {
    double axis[kMaxDim * 16];
    if (r_ > 16) throw std::invalid_argument("r too large for phi_all");
    for (int a = 0; a < dim_; ++a) phi1_all(x[a], axis + a * r_);
    out[0] = 1.0;
    int len = 1;
    for (int a = 0; a < dim_; ++a) {
      for (int k = len - 1; k >= 0; --k) {
        const double v = out[k];
        for (int b = r_ - 1; b >= 0; --b) out[k * r_ + b] = v * axis[a * r_ + b];
      }
      len *= r_;
    }
  }

  /// Integral over [0,1] of the 1-D basis function phi_a.
  double weight1(int a) const { return weights1_[a]; }

  /// Integral over [0,1]^dim of phi_k.
  double weight(int k) const {
    int dg[kMaxDim];
    digits(k, dg);
    double w = 1.0;
    for (int a = 0; a < dim_; ++a) w *= weights1_[dg[a]];
    return w;
  }

  /// Linear combination sum_k c_k phi_k(x).
  double combine(std::span<const double> c, std::span<const double> x) const {
    if (kappa_ == 1) return c[0];
    double axis[kMaxDim * 16];
    if (r_ > 16) throw std::invalid_argument("r too large for combine");
    for (int a = 0; a < dim_; ++a) phi1_all(x[a], axis + a * r_);
    double s = 0.0;
    int dg[kMaxDim];
    for (int k = 0; k < kappa_; ++k) {
      digits(k, dg);
      double v = 1.0;
      for (int a = 0; a < dim_; ++a) v *= axis[a * r_ + dg[a]];
      s += c[k] * v;
    }
    return s;
  }

 private:
  int r_ = 1;
  int dim_ = 1;
  double margin_ = kDefaultShiftMargin;
  int kappa_ = 1;
  std::vector<double> nodes_;
  std::vector<double> denom_;
  std::vector<double> weights1_;
};

/// How the grid shift rho is drawn.
enum class ShiftMode { uniform, zero };

/// Scalar function on [0,1]^d used by the non-template entry points.
using Function = std::function<double(std::span<const double>)>;

/// a_jk(rho) = phi_k(t_j - delta rho), row-major kappa x kappa.
inline std::vector<double> shift_matrix(const LagrangeBasis& basis, const Point& rho) {
  const int kappa = basis.kappa();
  const int d = basis.dim();
  std::vector<double> a(static_cast<std::size_t>(kappa) * kappa);
  Point x(d);
  for (int j = 0; j < kappa; ++j) {
    const Point t = basis.node(j);
    for (int c = 0; c < d; ++c) x[c] = t[c] - basis.margin() * rho[c];
    basis.phi_all(x.view(), {a.data() + static_cast<std::size_t>(j) * kappa, static_cast<std::size_t>(kappa)});
  }
  return a;
}

/// Sampling points t_k + delta rho of P_{0,rho}.
inline std::vector<Point> shifted_nodes(const LagrangeBasis& basis, const Point& rho) {
  std::vector<Point> pts(basis.kappa());
  for (int k = 0; k < basis.kappa(); ++k) {
    pts[k] = basis.node(k);
    for (int c = 0; c < basis.dim(); ++c) pts[k][c] += basis.margin() * rho[c];
  }
  return pts;
}

/// Polynomial sum_k c_k phi_k on [0,1]^d.
struct Polynomial {
  LagrangeBasis basis;
  std::vector<double> coeffs;

  double operator()(std::span<const double> x) const { return basis.combine(coeffs, x); }
  double operator()(const Point& x) const { return (*this)(x.view()); }
};

/// P f = sum_k f(t_k) phi_k from one sample per node.
inline Polynomial base_interpolate(const LagrangeBasis& basis, std::span<const double> samples) {
  if (static_cast<int>(samples.size()) != basis.kappa()) {
    throw std::invalid_argument("base_interpolate: need exactly one sample per node");
  }
  return {basis, std::vector<double>(samples.begin(), samples.end())};
}

/// Piecewise polynomial on the level-l dyadic cells; coefficients are stored
/// cell-major with kappa Lagrange coefficients per cell, in local coordinates.
struct PiecewisePolynomial {
  LagrangeBasis basis;
  int level = 0;
  std::vector<double> coeffs;
  std::vector<Point> eval_points;

  std::int64_t cells() const { return cell_count(level, basis.dim()); }

  double operator()(std::span<const double> x) const {
    double u[kMaxDim];
    const std::int64_t i = detail::to_local(level, x, {u, x.size()});
    const auto kappa = static_cast<std::size_t>(basis.kappa());
    return basis.combine({coeffs.data() + i * kappa, kappa}, {u, x.size()});
  }
  double operator()(const Point& x) const { return (*this)(x.view()); }
};

/// Writes x = s_{li} + 2^{-l} local for zero-based cell i.
inline void cell_point(int level, std::int64_t cell, std::span<const double> local, std::span<double> x) {
  const int d = static_cast<int>(local.size());
  detail::anchor(level, cell, d, x);
  for (int a = 0; a < d; ++a) x[a] += std::ldexp(local[a], -level);
}

/// P_{l,rho} f on every level-l cell, recording the sample points.
template <class F>
PiecewisePolynomial level_interpolate(const LagrangeBasis& basis, int level, const Point& rho, F&& f) {
  const int d = basis.dim();
  const int kappa = basis.kappa();
  const std::vector<double> a = shift_matrix(basis, rho);
  const std::vector<Point> local = shifted_nodes(basis, rho);
  PiecewisePolynomial out{basis, level, {}, {}};
  const std::int64_t cells = cell_count(level, d);
  out.coeffs.assign(static_cast<std::size_t>(cells * kappa), 0.0);
  out.eval_points.reserve(static_cast<std::size_t>(cells * kappa));
  std::vector<double> vals(kappa);
  Point x(d);
  for (std::int64_t i = 0; i < cells; ++i) {
    for (int k = 0; k < kappa; ++k) {
      cell_point(level, i, local[k].view(), {x.x.data(), static_cast<std::size_t>(d)});
      out.eval_points.push_back(x);
      vals[k] = f(x.view());
    }
    double* c = out.coeffs.data() + i * kappa;
    for (int j = 0; j < kappa; ++j) {
      double s = 0.0;
      for (int k = 0; k < kappa; ++k) s += a[static_cast<std::size_t>(j) * kappa + k] * vals[k];
      c[j] = s;
    }
  }
  return out;
}

/// Data of P'_{0,rho} = P_{1,rho} - P_{0,rho}:
///   P'_{0,rho} f = sum_{j<kappa'} sum_{k<kappa''} b_jk(rho) f(t_jk(rho)) psi_j,
/// with psi_j = R_{1,i0} phi_{j0}, j = kappa i0 + j0 (zero-based).
struct DetailFrame {
  struct Entry {
    std::vector<double> points;  // merged local points, dim per point
    std::vector<double> weights;
  };

  LagrangeBasis basis;
  Point rho;
  int kappa1 = 0;  // kappa'
  int kappa2 = 0;  // kappa''
  std::vector<double> nodes;    // t_jk, (j,k) row-major, dim per point
  std::vector<double> weights;  // b_jk
  std::vector<Entry> entries;   // per j, coincident nodes merged

  int dim() const { return basis.dim(); }

  std::span<const double> node(int j, int k) const {
    const auto d = static_cast<std::size_t>(dim());
    return {nodes.data() + (static_cast<std::size_t>(j) * kappa2 + k) * d, d};
  }
  double weight(int j, int k) const { return weights[static_cast<std::size_t>(j) * kappa2 + k]; }

  /// Rebuilds `entries` from `nodes` and `weights`.
  void merge() {
    const int d = dim();
    entries.assign(kappa1, {});
    for (int j = 0; j < kappa1; ++j) {
      Entry& e = entries[j];
      for (int k = 0; k < kappa2; ++k) {
        const auto t = node(j, k);
        const double w = weight(j, k);
        bool found = false;
        for (std::size_t m = 0; m < e.weights.size() && !found; ++m) {
          bool same = true;
          for (int a = 0; a < d; ++a) same = same && std::abs(e.points[m * d + a] - t[a]) <= 1e-14;
          if (same) {
            e.weights[m] += w;
            found = true;
          }
        }
        if (!found) {
          e.points.insert(e.points.end(), t.begin(), t.end());
          e.weights.push_back(w);
        }
      }
    }
  }

  /// psi_j at a point of [0,1]^d.
  double psi(int j, std::span<const double> x) const {
    double u[kMaxDim];
    const std::int64_t i0 = detail::to_local(1, x, {u, x.size()});
    if (i0 != j / basis.kappa()) return 0.0;
    return basis.phi(j % basis.kappa(), {u, x.size()});
  }
};

inline DetailFrame detail_frame(const LagrangeBasis& basis, const Point& rho) {
  const int d = basis.dim();
  const int kappa = basis.kappa();
  const int sub = 1 << d;
  DetailFrame fr;
  fr.basis = basis;
  fr.rho = rho;
  fr.kappa1 = sub * kappa;
  fr.kappa2 = 2 * kappa;
  fr.nodes.resize(static_cast<std::size_t>(fr.kappa1) * fr.kappa2 * d);
  fr.weights.resize(static_cast<std::size_t>(fr.kappa1) * fr.kappa2);

  const std::vector<double> a = shift_matrix(basis, rho);
  const std::vector<Point> shifted = shifted_nodes(basis, rho);
  std::vector<double> beta(kappa);
  Point s(d), y(d);
  for (int i0 = 0; i0 < sub; ++i0) {
    detail::anchor(1, i0, d, {s.x.data(), static_cast<std::size_t>(d)});
    for (int j0 = 0; j0 < kappa; ++j0) {
      const int j = kappa * i0 + j0;
      const Point tj0 = basis.node(j0);
      for (int c = 0; c < d; ++c) y[c] = s[c] + 0.5 * tj0[c];
      // beta_{i0 m j0} = phi_m(s_{1,i0} + t_{j0}/2)
      basis.phi_all(y.view(), beta);
      for (int k = 0; k < kappa; ++k) {
        double* t1 = fr.nodes.data() + (static_cast<std::size_t>(j) * fr.kappa2 + k) * d;
        double* t2 = fr.nodes.data() + (static_cast<std::size_t>(j) * fr.kappa2 + kappa + k) * d;
        for (int c = 0; c < d; ++c) {
          t1[c] = s[c] + 0.5 * shifted[k][c];
          t2[c] = shifted[k][c];
        }
        fr.weights[static_cast<std::size_t>(j) * fr.kappa2 + k] = a[static_cast<std::size_t>(j0) * kappa + k];
        double acc = 0.0;
        for (int m = 0; m < kappa; ++m) acc += beta[m] * a[static_cast<std::size_t>(m) * kappa + k];
        fr.weights[static_cast<std::size_t>(j) * fr.kappa2 + kappa + k] = -acc;
      }
    }
  }
  fr.merge();
  return fr;
}

/// P'_{l,rho} f = sum_i sum_j c(i,j) psi_{lij}, with psi_{lij} = R_{li} psi_j.
struct DetailExpansion {
  LagrangeBasis basis;
  int level = 0;
  int kappa1 = 0;
  std::vector<double> coeffs;  // cell-major, kappa' per cell
  std::int64_t eval_count = 0;

  double operator()(std::span<const double> x) const {
    const int d = basis.dim();
    double u[kMaxDim], v[kMaxDim];
    const std::int64_t i = detail::to_local(level, x, {u, x.size()});
    const std::int64_t i0 = detail::to_local(1, {u, x.size()}, {v, x.size()});
    const int kappa = basis.kappa();
    const double* c = coeffs.data() + i * kappa1 + i0 * kappa;
    return basis.combine({c, static_cast<std::size_t>(kappa)}, {v, static_cast<std::size_t>(d)});
  }
  double operator()(const Point& x) const { return (*this)(x.view()); }
};

template <class F>
DetailExpansion detail_apply(const DetailFrame& frame, int level, F&& f) {
  const int d = frame.dim();
  const std::int64_t cells = cell_count(level, d);
  DetailExpansion out{frame.basis, level, frame.kappa1, {}, 0};
  out.coeffs.assign(static_cast<std::size_t>(cells * frame.kappa1), 0.0);
  Point x(d);
  for (std::int64_t i = 0; i < cells; ++i) {
    for (int j = 0; j < frame.kappa1; ++j) {
      const auto& e = frame.entries[j];
      double s = 0.0;
      for (std::size_t m = 0; m < e.weights.size(); ++m) {
        cell_point(level, i, {e.points.data() + m * d, static_cast<std::size_t>(d)},
                   {x.x.data(), static_cast<std::size_t>(d)});
        s += e.weights[m] * f(x.view());
      }
      out.eval_count += static_cast<std::int64_t>(e.weights.size());
      out.coeffs[static_cast<std::size_t>(i * frame.kappa1 + j)] = s;
    }
  }
  return out;
}

/// Uniform or zero shift on [0,1]^d.
template <class Rng>
Point draw_shift(ShiftMode mode, int dim, Rng& rng) {
  Point rho(dim);
  if (mode == ShiftMode::uniform) {
    for (int a = 0; a < dim; ++a) rho[a] = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  }
  return rho;
}

}  // namespace paramint
