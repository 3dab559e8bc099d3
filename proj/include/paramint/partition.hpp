#pragma once

// Dyadic partitions of [0,1]^d.
//
// Level l splits every axis into 2^l intervals. Cells are enumerated
// row-major over the per-axis interval indices with the last axis fastest,
// so for D = D1 x D2 the joint index factors as i = 2^{d2 l}(i1 - 1) + i2.
// Public cell indices are 1-based; the zero-based helpers below are used by
// the numerical kernels.
//
// Point location: cells are half-open [a, b) per axis except the last cell
// of an axis, which also owns the face x = 1.

#include "paramint/problem.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>

namespace paramint {

/// A point of [0,1]^d with d <= kMaxDim.
struct Point {
  std::array<double, kMaxDim> x{};
  int dim = 0;

  Point() = default;
  explicit Point(int d) : dim(d) {}
  Point(std::initializer_list<double> values) : dim(static_cast<int>(values.size())) {
    int a = 0;
    for (double v : values) x[a++] = v;
  }

  double& operator[](int a) { return x[a]; }
  double operator[](int a) const { return x[a]; }
  std::span<const double> view() const { return {x.data(), static_cast<std::size_t>(dim)}; }
};

inline std::int64_t cells_per_axis(int level) {
  if (level < 0 || level > 50) throw std::out_of_range("level must lie in [0, 50]");
  return std::int64_t{1} << level;
}

/// Number of level-l cells of [0,1]^d, i.e. 2^{dl}.
inline std::int64_t cell_count(int level, int dim) {
  if (level < 0 || static_cast<std::int64_t>(level) * dim > 62) {
    throw std::out_of_range("2^{dl} does not fit the index type");
  }
  return std::int64_t{1} << (level * dim);
}

namespace detail {

inline int axis_cell(int level, double x) {
  const std::int64_t m = cells_per_axis(level);
  const double scaled = x * static_cast<double>(m);  // exact, same as ldexp
  if (!(scaled > 0.0)) return 0;
  const auto k = static_cast<std::int64_t>(scaled);
  return static_cast<int>(k >= m ? m - 1 : k);
}

/// Zero-based cell containing x (length dim), per the ownership rule.
inline std::int64_t locate(int level, std::span<const double> x) {
  std::int64_t index = 0;
  for (double v : x) index = (index << level) + axis_cell(level, v);
  return index;
}

/// Per-axis interval indices of zero-based cell `index`.
inline void axis_indices(int level, std::int64_t index, int dim, std::span<std::int64_t> out) {
  const std::int64_t mask = cells_per_axis(level) - 1;
  for (int a = dim - 1; a >= 0; --a) {
    out[a] = index & mask;
    index >>= level;
  }
}

/// Writes 2^l (x - anchor) for the level-l cell containing x; returns the cell.
inline std::int64_t to_local(int level, std::span<const double> x, std::span<double> local) {
  std::int64_t index = 0;
  for (std::size_t a = 0; a < x.size(); ++a) {
    const int k = axis_cell(level, x[a]);
    index = (index << level) + k;
    local[a] = x[a] * static_cast<double>(std::int64_t{1} << level) - k;
  }
  return index;
}

/// Anchor of zero-based cell `index` written into out[0..dim).
inline void anchor(int level, std::int64_t index, int dim, std::span<double> out) {
  const std::int64_t mask = cells_per_axis(level) - 1;
  for (int a = dim - 1; a >= 0; --a) {
    out[a] = std::ldexp(static_cast<double>(index & mask), -level);
    index >>= level;
  }
}

}  // namespace detail

/// Anchor s_{li} (componentwise-least corner) of the 1-based cell i.
inline Point cell_anchor(int level, std::int64_t i, int dim) {
  if (dim < 1 || dim > kMaxDim) throw std::out_of_range("dimension out of range");
  if (i < 1 || i > cell_count(level, dim)) throw std::out_of_range("cell index out of range");
  Point s(dim);
  detail::anchor(level, i - 1, dim, {s.x.data(), static_cast<std::size_t>(dim)});
  return s;
}

/// Splits a 1-based joint index into (i1, i2) with i = 2^{d2 l}(i1 - 1) + i2.
inline std::pair<std::int64_t, std::int64_t> split_index(std::int64_t i, int level, int d1, int d2) {
  if (i < 1 || i > cell_count(level, d1 + d2)) throw std::out_of_range("cell index out of range");
  const std::int64_t n2 = cell_count(level, d2);
  return {(i - 1) / n2 + 1, (i - 1) % n2 + 1};
}

inline std::int64_t join_index(std::int64_t i1, std::int64_t i2, int level, int d2) {
  return cell_count(level, d2) * (i1 - 1) + i2;
}

/// s_{li} + 2^{-l} s, the argument map of E_{li}.
inline Point rescale_to_cell(int level, std::int64_t i, const Point& s) {
  Point out = cell_anchor(level, i, s.dim);
  for (int a = 0; a < s.dim; ++a) out[a] += std::ldexp(s[a], -level);
  return out;
}

/// 2^l (x - s_{li}), the argument map of R_{li} on its cell.
inline Point restrict_from_cell(int level, std::int64_t i, const Point& x) {
  const Point s = cell_anchor(level, i, x.dim);
  Point out(x.dim);
  for (int a = 0; a < x.dim; ++a) out[a] = std::ldexp(x[a] - s[a], level);
  return out;
}

/// 1-based level-l cell owning x.
inline std::int64_t locate_cell(int level, const Point& x) { return detail::locate(level, x.view()) + 1; }

}  // namespace paramint
