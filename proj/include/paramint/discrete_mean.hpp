#pragma once

// Vector-valued mean computation on L_p^{N1,N2}:
//   (S f)(i) = N2^{-1} sum_j f(i,j),  i < N1,
// exactly and by two Monte Carlo estimators. Rows and columns are zero-based
// here. A tensor is anything with rows(), cols() and operator()(i, j); every
// operator() call is one query and is counted.

#include "paramint/problem.hpp"
#include "paramint/rng.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <random>
#include <ranges>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace paramint {

template <class T>
concept ValueTensor = requires(const T& t, std::int64_t i) {
  { t.rows() } -> std::convertible_to<std::int64_t>;
  { t.cols() } -> std::convertible_to<std::int64_t>;
  { t(i, i) } -> std::convertible_to<double>;
};

struct DenseTensor {
  std::int64_t n1 = 0;
  std::int64_t n2 = 0;
  std::vector<double> values;  // row-major

  DenseTensor() = default;
  DenseTensor(std::int64_t rows, std::int64_t cols, double fill = 0.0)
      : n1(rows), n2(cols), values(static_cast<std::size_t>(rows * cols), fill) {}

  std::int64_t rows() const { return n1; }
  std::int64_t cols() const { return n2; }
  double operator()(std::int64_t i, std::int64_t j) const { return values[static_cast<std::size_t>(i * n2 + j)]; }
  double& at(std::int64_t i, std::int64_t j) { return values[static_cast<std::size_t>(i * n2 + j)]; }
};

struct MeanEstimate {
  std::vector<double> row_means;
  std::int64_t eval_count = 0;
};

/// (|M|^{-1} sum |f(i)|^p)^{1/p}, or max |f(i)| for p = inf.
inline double discrete_norm(std::span<const double> f, const Exponent& p) {
  if (f.empty()) throw std::invalid_argument("discrete_norm of an empty vector");
  if (p.is_infinite()) {
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
  }
  const double pv = p.value();
  double scale = 0.0;
  for (double v : f) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (double v : f) s += std::pow(std::abs(v) / scale, pv);
  return scale * std::pow(s / static_cast<double>(f.size()), 1.0 / pv);
}

inline double discrete_norm(const DenseTensor& f, const Exponent& p) { return discrete_norm(f.values, p); }

template <ValueTensor T>
MeanEstimate exact_mean(const T& f) {
  MeanEstimate out;
  out.row_means.assign(static_cast<std::size_t>(f.rows()), 0.0);
  for (std::int64_t i = 0; i < f.rows(); ++i) {
    double s = 0.0;
    for (std::int64_t j = 0; j < f.cols(); ++j) s += f(i, j);
    out.row_means[static_cast<std::size_t>(i)] = s / static_cast<double>(f.cols());
  }
  out.eval_count = f.rows() * f.cols();
  return out;
}

namespace detail {

/// n distinct indices from [0, population), uniformly.
inline std::vector<std::int64_t> sample_without_replacement(std::int64_t population, std::int64_t n, Rng& rng) {
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(n));
  if (n * 4 >= population) {
    std::vector<std::int64_t> all(static_cast<std::size_t>(population));
    std::iota(all.begin(), all.end(), std::int64_t{0});
    std::sample(all.begin(), all.end(), std::back_inserter(out), n, rng);
    return out;
  }
  std::uniform_int_distribution<std::int64_t> pick(0, population - 1);
  std::unordered_set<std::int64_t> seen;
  seen.reserve(static_cast<std::size_t>(2 * n));
  while (static_cast<std::int64_t>(out.size()) < n) {
    const std::int64_t i = pick(rng);
    if (seen.insert(i).second) out.push_back(i);
  }
  return out;
}

inline void check_cap(std::int64_t count, std::int64_t cap, const char* what) {
  if (count > cap) {
    throw InvariantViolation(std::string(what) + ": " + std::to_string(count) + " queries exceed the cap " +
                             std::to_string(cap));
  }
}

/// Splits `total` into integer parts proportional to `weights` (largest
/// remainder, ties to the lower index). Weights must have a positive sum.
inline std::vector<std::int64_t> proportional_split(std::span<const double> weights, std::int64_t total) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::int64_t> parts(weights.size(), 0);
  std::vector<std::pair<double, std::size_t>> rem;
  rem.reserve(weights.size());
  std::int64_t used = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(total) * (weights[i] / sum);
    parts[i] = static_cast<std::int64_t>(std::floor(exact));
    used += parts[i];
    rem.emplace_back(exact - static_cast<double>(parts[i]), i);
  }
  std::int64_t left = total - used;
  if (left > 0) {
    std::ranges::sort(rem, [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    for (std::size_t t = 0; left > 0; t = (t + 1) % rem.size(), --left) ++parts[rem[t].second];
  }
  return parts;
}

}  // namespace detail

/// Non-adaptive estimator: with k = ceil(n/N1) uniform columns per row when
/// n >= N1; otherwise n distinct rows with one sample each and zero elsewhere.
/// At most 2n queries, unbiased for n >= N1.
template <ValueTensor T>
MeanEstimate mc_mean_nonadaptive(const T& f, std::int64_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("mc_mean_nonadaptive: budget must be positive");
  const std::int64_t n1 = f.rows(), n2 = f.cols();
  MeanEstimate out;
  out.row_means.assign(static_cast<std::size_t>(n1), 0.0);
  std::uniform_int_distribution<std::int64_t> col(0, n2 - 1);
  if (n >= n1) {
    const std::int64_t k = (n + n1 - 1) / n1;
    for (std::int64_t i = 0; i < n1; ++i) {
      double s = 0.0;
      for (std::int64_t t = 0; t < k; ++t) s += f(i, col(rng));
      out.row_means[static_cast<std::size_t>(i)] = s / static_cast<double>(k);
    }
    out.eval_count = n1 * k;
  } else {
    for (std::int64_t i : detail::sample_without_replacement(n1, n, rng)) {
      out.row_means[static_cast<std::size_t>(i)] = f(i, col(rng));
    }
    out.eval_count = n;
  }
  detail::check_cap(out.eval_count, 2 * n, "non-adaptive mean");
  return out;
}

/// Adaptive estimator for 2 < p < inf, median of m independent repetitions of:
///   stage 1  per-row empirical p-th moments mu_i from ceil(n/N1) samples
///            (or from n random rows with one sample when n < N1);
///   stage 2  the same number of fresh base samples plus n extra samples
///            split across rows in proportion to mu_i (evenly if all mu_i = 0).
/// A row estimate is the mean of its stage-2 samples, 0 if it has none.
/// At most 5n queries per repetition.
template <ValueTensor T>
MeanEstimate mc_mean_adaptive(const T& f, std::int64_t n, int m, const Exponent& p, Rng& rng) {
  if (!(p.inv() < Rational(1, 2))) throw std::invalid_argument("mc_mean_adaptive requires p > 2");
  if (p.is_infinite()) throw std::invalid_argument("mc_mean_adaptive requires p < inf");
  if (n < 1) throw std::invalid_argument("mc_mean_adaptive: budget must be positive");
  if (m < 1) throw std::invalid_argument("mc_mean_adaptive: m must be positive");
  const std::int64_t n1 = f.rows(), n2 = f.cols();
  const double pv = p.value();
  std::uniform_int_distribution<std::int64_t> col(0, n2 - 1);

  // (row, estimate) for every row with at least one stage-2 sample
  std::vector<std::pair<std::int64_t, double>> visits;
  std::int64_t count = 0;

  std::vector<std::int64_t> rows1;
  std::vector<double> mu;
  for (int rep = 0; rep < m; ++rep) {
    const bool dense = n >= n1;
    const std::int64_t k = dense ? (n + n1 - 1) / n1 : 1;
    rows1.clear();
    mu.clear();
    if (dense) {
      rows1.resize(static_cast<std::size_t>(n1));
      std::iota(rows1.begin(), rows1.end(), std::int64_t{0});
    } else {
      rows1 = detail::sample_without_replacement(n1, n, rng);
    }
    for (std::int64_t i : rows1) {
      double s = 0.0;
      for (std::int64_t t = 0; t < k; ++t) s += std::pow(std::abs(f(i, col(rng))), pv);
      mu.push_back(s / static_cast<double>(k));
    }
    count += static_cast<std::int64_t>(rows1.size()) * k;

    // stage 2, accumulated sparsely by row
    std::vector<std::pair<std::int64_t, double>> local;
    auto draw = [&](std::int64_t i, std::int64_t times) {
      for (std::int64_t t = 0; t < times; ++t) local.emplace_back(i, f(i, col(rng)));
      count += times;
    };
    if (dense) {
      for (std::int64_t i = 0; i < n1; ++i) draw(i, k);
    } else {
      for (std::int64_t i : detail::sample_without_replacement(n1, n, rng)) draw(i, 1);
    }
    // all-zero moments: spread the extra samples evenly
    if (!(std::accumulate(mu.begin(), mu.end(), 0.0) > 0.0)) std::ranges::fill(mu, 1.0);
    const auto extra = detail::proportional_split(mu, n);
    for (std::size_t t = 0; t < rows1.size(); ++t) draw(rows1[t], extra[t]);
    std::ranges::stable_sort(local, {}, &std::pair<std::int64_t, double>::first);
    for (std::size_t a = 0; a < local.size();) {
      std::size_t b = a;
      double s = 0.0;
      for (; b < local.size() && local[b].first == local[a].first; ++b) s += local[b].second;
      visits.emplace_back(local[a].first, s / static_cast<double>(b - a));
      a = b;
    }
  }
  detail::check_cap(count, 6 * static_cast<std::int64_t>(m) * n, "adaptive mean");

  MeanEstimate out;
  out.row_means.assign(static_cast<std::size_t>(n1), 0.0);
  out.eval_count = count;
  std::ranges::stable_sort(visits, {}, &std::pair<std::int64_t, double>::first);
  std::vector<double> vals;
  for (std::size_t a = 0; a < visits.size();) {
    std::size_t b = a;
    vals.clear();
    for (; b < visits.size() && visits[b].first == visits[a].first; ++b) vals.push_back(visits[b].second);
    // repetitions that never reached the row contribute 0
    vals.resize(static_cast<std::size_t>(m), 0.0);
    const std::size_t mid = vals.size() / 2;
    std::ranges::nth_element(vals, vals.begin() + static_cast<std::ptrdiff_t>(mid));
    double med = vals[mid];
    if (vals.size() % 2 == 0) {
      const double lower = *std::max_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(mid));
      med = 0.5 * (lower + med);
    }
    out.row_means[static_cast<std::size_t>(visits[a].first)] = med;
    a = b;
  }
  return out;
}

}  // namespace paramint
