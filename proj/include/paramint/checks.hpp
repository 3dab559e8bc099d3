#pragma once

// Invariant checks shared by the `selftest` subcommand and the acceptance
// runner. Each returns a named pass/fail with the measured value.

#include "paramint/discrete_mean.hpp"
#include "paramint/fixtures.hpp"
#include "paramint/interpolation.hpp"
#include "paramint/multilevel.hpp"
#include "paramint/rates.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

namespace paramint::checks {

struct CheckResult {
  std::string name;
  bool ok = false;
  std::string detail;
};

inline std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

inline std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

/// Sup error of P_{l,rho} on random polynomials of max degree r-1.
inline CheckResult interpolation_reproduction(std::uint64_t seed, int shifts = 20, int points = 1000) {
  Rng rng = make_rng(seed, {101});
  double worst = 0.0;
  for (int r = 1; r <= 3; ++r) {
    for (int d = 1; d <= 2; ++d) {
      const LagrangeBasis basis(r, d);
      for (int t = 0; t < shifts; ++t) {
        const Point rho = draw_shift(ShiftMode::uniform, d, rng);
        const fixtures::RandomPolynomial f(r - 1, d, rng);
        const auto p = level_interpolate(basis, 2, rho, f);
        for (int k = 0; k < points; ++k) {
          const Point x = fixtures::random_point(d, rng);
          worst = std::max(worst, std::abs(p(x) - f(x.view())));
        }
      }
    }
  }
  return {"interpolation reproduction", worst <= 1e-10, fmt("sup error %.3e (limit 1e-10)", worst)};
}

namespace detail {

/// max |P_{l1} f - P_{l0} f - sum_l P'_l f| at random points.
inline double telescoping_error(const DetailFrame& fr, int l0, int l1, const fixtures::RandomSmooth& f, Rng& rng,
                                int points) {
  const auto p0 = level_interpolate(fr.basis, l0, fr.rho, f);
  const auto p1 = level_interpolate(fr.basis, l1, fr.rho, f);
  std::vector<DetailExpansion> dets;
  for (int l = l0; l < l1; ++l) dets.push_back(detail_apply(fr, l, f));
  double worst = 0.0;
  for (int k = 0; k < points; ++k) {
    const Point x = fixtures::random_point(fr.dim(), rng);
    double s = p0(x);
    for (const auto& dl : dets) s += dl(x);
    worst = std::max(worst, std::abs(s - p1(x)));
  }
  return worst;
}

inline void flip_detail_sign(DetailFrame& fr) {
  const int kappa = fr.basis.kappa();
  for (int j = 0; j < fr.kappa1; ++j)
    for (int k = kappa; k < fr.kappa2; ++k) fr.weights[static_cast<std::size_t>(j) * fr.kappa2 + k] *= -1.0;
  fr.merge();
}

}  // namespace detail

/// Telescoping identity for (l0,l1) = (1,4), r = 2, d = 2.
inline CheckResult telescoping(std::uint64_t seed, int shifts = 10, int points = 1000) {
  Rng rng = make_rng(seed, {102});
  double worst = 0.0;
  for (int t = 0; t < shifts; ++t) {
    const DetailFrame fr = detail_frame(LagrangeBasis(2, 2), draw_shift(ShiftMode::uniform, 2, rng));
    const fixtures::RandomSmooth f(2, rng);
    worst = std::max(worst, detail::telescoping_error(fr, 1, 4, f, rng, points));
  }
  return {"telescoping identity", worst <= 1e-9, fmt("max deviation %.3e (limit 1e-9)", worst)};
}

/// The same identity must fail once the sign of the second weight group is flipped.
inline CheckResult telescoping_mutation(std::uint64_t seed) {
  Rng rng = make_rng(seed, {103});
  DetailFrame fr = detail_frame(LagrangeBasis(2, 2), draw_shift(ShiftMode::uniform, 2, rng));
  detail::flip_detail_sign(fr);
  const fixtures::RandomSmooth f(2, rng);
  const double e = detail::telescoping_error(fr, 1, 4, f, rng, 200);
  return {"sign mutation detected", e > 1e-3, fmt("mutated deviation %.3e (must exceed 1e-3)", e)};
}

/// V_l(exact_mean(U_l f)) against t-quadrature of P'_l f on a 256-point s-grid.
inline CheckResult decomposition(std::uint64_t seed) {
  using Gauss = boost::math::quadrature::gauss<double, 10>;
  Rng rng = make_rng(seed, {104});
  const int l = 2;
  double worst = 0.0;
  for (int r : {1, 2}) {
    const LagrangeBasis basis(r, 2);
    const DetailFrame fr = detail_frame(basis, draw_shift(ShiftMode::uniform, 2, rng));
    const ThetaSet th = s_theta(basis, 1, 1);
    const fixtures::RandomSmooth f(2, rng);
    const UTensor u(fr, l, 1, 1, f);
    const auto v = v_operator(exact_mean(u).row_means, l, th);
    const DetailExpansion dx = detail_apply(fr, l, f);
    const int pieces = 1 << (l + 1);
    for (int k = 0; k < 256; ++k) {
      const double s = (k + 0.5) / 256.0;
      double oracle = 0.0;
      for (int c = 0; c < pieces; ++c) {
        oracle += Gauss::integrate(
            [&](double t) {
              const double x[2] = {s, t};
              return dx(std::span<const double>(x, 2));
            },
            double(c) / pieces, double(c + 1) / pieces);
      }
      worst = std::max(worst, std::abs(v({&s, 1}) - oracle));
    }
  }
  return {"decomposition identity", worst <= 1e-9, fmt("max deviation %.3e (limit 1e-9)", worst)};
}

/// exact_mean against integer summation on random small integer tensors.
inline CheckResult exact_mean_oracle(std::uint64_t seed, int trials = 10000) {
  Rng rng = make_rng(seed, {105});
  int failures = 0;
  for (int t = 0; t < trials; ++t) {
    const std::int64_t n1 = 1 + static_cast<std::int64_t>(rng() % 8), n2 = 1 + static_cast<std::int64_t>(rng() % 8);
    DenseTensor x(n1, n2);
    std::vector<std::int64_t> ints(x.values.size());
    for (std::size_t a = 0; a < ints.size(); ++a) {
      ints[a] = static_cast<std::int64_t>(rng() % 201) - 100;
      x.values[a] = static_cast<double>(ints[a]);
    }
    const auto m = exact_mean(x);
    for (std::int64_t i = 0; i < n1; ++i) {
      std::int64_t s = 0;
      for (std::int64_t j = 0; j < n2; ++j) s += ints[static_cast<std::size_t>(i * n2 + j)];
      // the mean of integers is exact up to one rounding; scaling back recovers the integer sum
      if (std::llround(m.row_means[static_cast<std::size_t>(i)] * static_cast<double>(n2)) != s) ++failures;
    }
  }
  return {"exact mean oracle", failures == 0, std::to_string(failures) + " mismatches in " + std::to_string(trials) + " tensors"};
}

/// Per-row z statistics of the non-adaptive estimator with n >= N1.
inline CheckResult unbiasedness(std::uint64_t seed, int runs = 100000) {
  Rng fixed = make_rng(0x5eed, {106});
  DenseTensor t(4, 8);
  for (double& v : t.values) v = 2.0 * uniform01(fixed) - 1.0;
  const auto exact = exact_mean(t);
  Rng rng = make_rng(seed, {107});
  std::vector<double> s(4, 0.0), s2(4, 0.0);
  for (int r = 0; r < runs; ++r) {
    const auto m = mc_mean_nonadaptive(t, 8, rng);
    for (int i = 0; i < 4; ++i) {
      s[i] += m.row_means[i];
      s2[i] += m.row_means[i] * m.row_means[i];
    }
  }
  double worst = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double mean = s[i] / runs, var = s2[i] / runs - mean * mean;
    worst = std::max(worst, std::abs(mean - exact.row_means[i]) / std::sqrt(var / runs));
  }
  return {"unbiasedness", worst <= 4.0, fmt("max |z| %.3f over 4 rows, R = %.0f", worst, runs)};
}

namespace detail {

struct CountingTensor {
  const DenseTensor& t;
  mutable std::int64_t calls = 0;
  std::int64_t rows() const { return t.rows(); }
  std::int64_t cols() const { return t.cols(); }
  double operator()(std::int64_t i, std::int64_t j) const {
    ++calls;
    return t(i, j);
  }
};

struct CountingField {
  const fixtures::RandomSmooth& f;
  mutable std::int64_t calls = 0;
  double operator()(std::span<const double> x) const {
    ++calls;
    return f(x);
  }
};

}  // namespace detail

/// Query caps of both estimators and the composite bound of full runs.
inline CheckResult cardinality_caps(std::uint64_t seed, int tensors = 200) {
  Rng rng = make_rng(seed, {108});
  int violations = 0, checked = 0;
  const Exponent p = Exponent::parse("4");
  for (int t = 0; t < tensors; ++t) {
    const std::int64_t n1 = 1 + static_cast<std::int64_t>(rng() % 30), n2 = 1 + static_cast<std::int64_t>(rng() % 30);
    DenseTensor x(n1, n2);
    for (double& v : x.values) v = 2.0 * uniform01(rng) - 1.0;
    const std::int64_t n = 1 + static_cast<std::int64_t>(rng() % 100);
    const int m = 1 + static_cast<int>(rng() % 5);
    detail::CountingTensor a{x}, b{x};
    const auto ea = mc_mean_nonadaptive(a, n, rng);
    const auto eb = mc_mean_adaptive(b, n, m, p, rng);
    violations += a.calls != ea.eval_count || a.calls > 2 * n;
    violations += b.calls != eb.eval_count || b.calls > 6 * m * n;
    checked += 2;
  }
  const fixtures::RandomSmooth g(2, rng);
  for (auto alg : {Algorithm::a4, Algorithm::a5}) {
    for (int r : {1, 2}) {
      const auto s = make_problem(r, "4", r == 1 ? "inf" : "8", 1, 1);
      for (std::int64_t n : {64, 500, 4096}) {
        detail::CountingField f{g};
        const auto res = run(alg, s, n, f, derive_seed(seed, {109, static_cast<std::uint64_t>(n)}));
        const auto& sc = res.schedule;
        violations += res.ledger.total != f.calls || res.ledger.total > res.ledger.bound;
        for (int l = sc.l0; l < sc.l1; ++l) {
          const std::int64_t q = res.ledger.level_queries[static_cast<std::size_t>(l - sc.l0)];
          const std::int64_t cap =
              alg == Algorithm::a4 ? 2 * sc.budget(l)
                                   : 6 * repetitions(l, s, 1.0, 4 * LagrangeBasis(r, 2).kappa()) * sc.budget(l);
          violations += q > cap;
        }
        ++checked;
      }
    }
  }
  return {"cardinality caps", violations == 0,
          std::to_string(violations) + " violations in " + std::to_string(checked) + " audited runs"};
}

/// Gap exponent 1/8 at the maximizer, <= 1/8 on random specs, branch continuity.
inline CheckResult rates_arithmetic(std::uint64_t seed, int specs = 10000) {
  Rng rng = make_rng(seed, {110});
  int bad = 0;
  if (gap_exponent(make_problem(1, "4", "inf", 1, 1)) != Rational(1, 8)) ++bad;
  int drawn = 0;
  while (drawn < specs) {
    const int den = 2 + static_cast<int>(rng() % 24);
    const int a = static_cast<int>(rng() % den), b = static_cast<int>(rng() % den);
    ProblemSpec s;
    s.q = Exponent::from_reciprocal(Rational(std::min(a, b), den));
    s.p = Exponent::from_reciprocal(Rational(std::max(a, b), den));
    s.d1 = 1 + static_cast<int>(rng() % 4);
    s.d2 = 1 + static_cast<int>(rng() % 4);
    s.r = static_cast<int>(rng() % 9);
    if (!adaptive_regime(s) || !solvable_check(s)) continue;
    ++drawn;
    const Rational th = gap_exponent(s);
    if (th > Rational(1, 8) || th < Rational(0)) ++bad;
    if (th != phi1_exponent(s).n_exp - phi2_exponent(s).n_exp) ++bad;
  }
  // both Phi_1 branch formulas agree on the threshold
  int boundary = 0;
  for (int t = 0; t < 20000 && boundary < 200; ++t) {
    const int den = 1 + static_cast<int>(rng() % 12);
    ProblemSpec s;
    s.p = Exponent::from_reciprocal(Rational(static_cast<int>(rng() % (den + 1)), den));
    s.q = Exponent::from_reciprocal(Rational(static_cast<int>(rng() % (den + 1)), den));
    s.d1 = 1 + static_cast<int>(rng() % 6);
    s.d2 = 1 + static_cast<int>(rng() % 4);
    const Rational r = phi1_threshold(s) * Rational(s.d1);
    if (r.denominator() != 1) continue;
    s.r = static_cast<int>(r.numerator());
    ++boundary;
    const Rational plus = positive_part(s.p.inv() - s.q.inv());
    const Rational b1 =
        (Rational(-s.r) + plus * Rational(s.d1) - (Rational(1) - p_bar_inv(s)) * Rational(s.d2)) / Rational(s.d());
    if (b1 != phi1_exponent(s).n_exp) ++bad;
  }
  return {"rates arithmetic", bad == 0,
          std::to_string(bad) + " failures over " + std::to_string(specs) + " random specs and " +
              std::to_string(boundary) + " branch boundaries"};
}

/// Zero output on f = 0 and exact Sf on max-degree-(r-1) polynomials.
inline CheckResult exactness(std::uint64_t seed, int seeds = 10) {
  Rng rng = make_rng(seed, {111});
  double worst = 0.0;
  int nonzero = 0;
  auto zero = [](std::span<const double>) { return 0.0; };
  for (int r : {1, 2, 3}) {
    const fixtures::RandomPolynomial f(r - 1, 2, rng);
    // closed-form Sf: integrate the monomials over t
    auto sf = [&](double s) {
      double out = 0.0;
      for (std::size_t m = 0; m < f.coeffs.size(); ++m) {
        const int et = static_cast<int>(m % static_cast<std::size_t>(r));
        const int es = static_cast<int>(m / static_cast<std::size_t>(r));
        out += f.coeffs[m] * std::pow(s, es) / (et + 1);
      }
      return out;
    };
    const auto s4 = make_problem(r, "2", "2", 1, 1);
    const auto s5 = make_problem(r, "4", "8", 1, 1);
    for (int k = 0; k < seeds; ++k) {
      const std::uint64_t sd = derive_seed(seed, {112, static_cast<std::uint64_t>(k)});
      for (const RunResult& z : {run_a4(s4, 256, zero, sd), run_a5(s5, 256, zero, sd)})
        for (const auto& part : z.output.parts)
          for (double c : part.coeffs) nonzero += c != 0.0;
      const RunResult a = run_a4(s4, 256, f, sd), b = run_a5(s5, 256, f, sd);
      for (int t = 0; t < 50; ++t) {
        const double x = uniform01(rng);
        worst = std::max({worst, std::abs(a.output({&x, 1}) - sf(x)), std::abs(b.output({&x, 1}) - sf(x))});
      }
    }
  }
  return {"zero preservation and polynomial exactness", nonzero == 0 && worst <= 1e-12,
          std::to_string(nonzero) + " nonzero coefficients on f = 0; polynomial deviation " +
              fmt("%.3e (limit 1e-12)", worst)};
}

}  // namespace paramint::checks
