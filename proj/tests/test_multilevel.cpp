#include "paramint/multilevel.hpp"
#include "paramint/rates.hpp"

#include "support.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <gtest/gtest.h>

#include <cmath>

using namespace paramint;
using fixtures::RandomPolynomial;
using fixtures::RandomSmooth;

namespace {

using Gauss = boost::math::quadrature::gauss<double, 10>;

ProblemSpec spec(int r, const char* p, const char* q, int d1, int d2) { return make_problem(r, p, q, d1, d2); }

/// Closed-form parametric integral of a polynomial over its last d2 variables.
double poly_param_integral(const RandomPolynomial& f, int d1, std::span<const double> s) {
  double out = 0.0;
  for (std::size_t m = 0; m < f.coeffs.size(); ++m) {
    std::size_t rest = m;
    double v = f.coeffs[m];
    for (int a = f.dim - 1; a >= 0; --a) {
      const int e = static_cast<int>(rest % (f.deg + 1));
      rest /= f.deg + 1;
      v *= a < d1 ? std::pow(s[a], e) : 1.0 / (e + 1);
    }
    out += v;
  }
  return out;
}

/// Integral over t in [0,1] of g(s, t), Gauss rule on 2^level pieces (d1 = d2 = 1).
template <class G>
double integrate_t(const G& g, double s, int level) {
  double total = 0.0;
  const double h = std::ldexp(1.0, -level);
  for (int c = 0; c < (1 << level); ++c) {
    total += Gauss::integrate(
        [&](double t) {
          const double x[2] = {s, t};
          return g(std::span<const double>(x, 2));
        },
        c * h, (c + 1) * h);
  }
  return total;
}

struct CountingFn {
  std::function<double(std::span<const double>)> f;
  mutable std::int64_t calls = 0;
  double operator()(std::span<const double> x) const {
    ++calls;
    return f(x);
  }
};

}  // namespace

TEST(Schedule, Examples) {
  const auto s = spec(1, "2", "2", 1, 1);
  const Schedule a = make_schedule(16, s, Rational(0));
  EXPECT_EQ(a.l0, 2);
  EXPECT_EQ(a.l1, 4);
  EXPECT_EQ(a.n_l, (std::vector<std::int64_t>{16, 16}));
  const Schedule b = make_schedule(256, spec(1, "inf", "inf", 1, 1), Rational(0));
  EXPECT_EQ(b.sigma1, 1);
  EXPECT_EQ(b.l0, 4);
  EXPECT_EQ(b.l1, 6);
}

TEST(Schedule, MinimalBudget) {
  for (const auto& s : {spec(1, "2", "2", 1, 1), spec(1, "inf", "inf", 1, 1), spec(2, "4", "inf", 2, 1),
                        spec(1, "4", "8", 1, 3), spec(3, "3", "5", 3, 2)}) {
    const std::int64_t n0 = minimal_budget(s);
    EXPECT_GE(n0, 2);
    const Schedule sc = schedule(n0, s, Algorithm::a4);
    EXPECT_GE(sc.l0, 2) << s.str();
    EXPECT_LT(sc.l0, sc.l1) << s.str();
    EXPECT_THROW(schedule(n0 - 1, s, Algorithm::a4), BudgetTooSmall);
    try {
      schedule(n0 - 1, s, Algorithm::a4);
    } catch (const BudgetTooSmall& e) {
      EXPECT_EQ(e.minimal, n0);
    }
  }
}

TEST(Schedule, LevelBounds) {
  // 2^{l0} within [n^{1/d}, 2^{d1} n^{1/d}], 2^{l1} within a constant of n^{1/d1} log^{-sigma1/d1}
  for (const auto& s : {spec(1, "2", "2", 1, 1), spec(1, "inf", "inf", 1, 1), spec(2, "4", "inf", 2, 1),
                        spec(1, "inf", "inf", 2, 2)}) {
    const std::int64_t n0 = minimal_budget(s);
    for (std::int64_t n = n0; n < (std::int64_t{1} << 30); n = n * 3 + 1) {
      const Schedule sc = schedule(n, s, Algorithm::a4);
      const double root = std::pow(static_cast<double>(n), 1.0 / s.d());
      EXPECT_LE(root, std::ldexp(1.0, sc.l0) * (1 + 1e-12));
      EXPECT_LE(std::ldexp(1.0, sc.l0), std::ldexp(root, s.d1) * (1 + 1e-12));
      const double target =
          std::pow(static_cast<double>(n), 1.0 / s.d1) * std::pow(std::log2(n + 1.0), -sc.sigma1 / double(s.d1));
      const double ratio = std::ldexp(1.0, sc.l1) / target;
      EXPECT_GE(ratio, 1.0 / 16) << s.str() << " n=" << n;
      // l0 is rounded up to a multiple of d1 (up to 2^d) and log l0 ~ log(log n / d)
      const double c = std::ldexp(2.0, s.d()) * std::pow(s.d(), sc.sigma1 / double(s.d1));
      EXPECT_LE(ratio, c) << s.str() << " n=" << n;
    }
  }
}

TEST(Schedule, DampingBudgets) {
  const auto s = spec(1, "2", "2", 1, 1);
  EXPECT_EQ(damping_policy(s, Algorithm::a4), Rational(1, 2));
  const Schedule sc = schedule(1 << 10, s, Algorithm::a4);
  ASSERT_EQ(sc.l0, 5);
  ASSERT_EQ(sc.l1, 10);
  for (int l = sc.l0; l < sc.l1; ++l) {
    const double e = 10 - 0.5 * std::min(l - sc.l0, sc.l1 - l);
    EXPECT_EQ(sc.budget(l), static_cast<std::int64_t>(std::ceil(std::exp2(e))));
  }
  EXPECT_EQ(sc.budget(5), 1024);
  EXPECT_EQ(sc.budget(7), 512);
}

TEST(Damping, Examples) {
  EXPECT_EQ(damping_policy(spec(1, "2", "2", 2, 1), Algorithm::a4), Rational(0));  // beta1 = 1
  const auto g = spec(1, "4", "inf", 1, 1);
  EXPECT_EQ(damping_policy(g, Algorithm::a4), Rational(1, 4));
  EXPECT_EQ(damping_policy(g, Algorithm::a5), Rational(0));  // beta2 = 1
  EXPECT_EQ(damping_policy(g, Algorithm::det), Rational(0));
  EXPECT_GT(damping_policy(spec(1, "4", "8", 1, 1), Algorithm::a5), Rational(0));
}

TEST(Damping, ZeroExactlyOnBoundary) {
  Rng rng = make_rng(21);
  int a4_zero = 0, a5_zero = 0;
  for (int t = 0; t < 4000; ++t) {
    const int den = 2 + static_cast<int>(rng() % 12);
    ProblemSpec s;
    const int a = static_cast<int>(rng() % (den + 1)), b = static_cast<int>(rng() % (den + 1));
    s.p = Exponent::from_reciprocal(Rational(std::max(a, b), den));
    s.q = Exponent::from_reciprocal(Rational(std::min(a, b), den));
    s.d1 = 1 + static_cast<int>(rng() % 3);
    s.d2 = 1 + static_cast<int>(rng() % 3);
    s.r = 1 + static_cast<int>(rng() % 6);
    if (!solvable_check(s)) continue;
    const bool z4 = damping_policy(s, Algorithm::a4) == Rational(0);
    ASSERT_EQ(z4, beta1(s) == 1) << s.str();
    a4_zero += z4;
    if (adaptive_regime(s)) {
      const bool z5 = damping_policy(s, Algorithm::a5) == Rational(0);
      if (beta2(s) == 1) {
        ASSERT_TRUE(z5) << s.str();
      }
      a5_zero += z5;
    }
  }
  EXPECT_GT(a4_zero, 0);
  EXPECT_GT(a5_zero, 0);
}

TEST(Theta, PiecewiseConstantCase) {
  const LagrangeBasis basis(1, 2);
  const ThetaSet th = s_theta(basis, 1, 1);
  ASSERT_EQ(th.kappa1(), 4);
  for (int j = 0; j < 4; ++j) {
    const int half = j / 2;
    for (double s : {0.1, 0.3, 0.49, 0.5, 0.7, 1.0}) {
      const double expect = (s < 0.5 ? 0 : 1) == half ? 0.5 : 0.0;
      EXPECT_NEAR(th(j, std::span<const double>(&s, 1)), expect, 1e-15) << j << " " << s;
    }
  }
}

TEST(Theta, FubiniMonteCarlo) {
  const LagrangeBasis basis(2, 2);
  const ThetaSet th = s_theta(basis, 1, 1);
  const DetailFrame fr = detail_frame(basis, Point(2));
  Rng rng = make_rng(22);
  const int samples = 1000000;
  std::vector<double> sum(th.kappa1(), 0.0), sum2(th.kappa1(), 0.0);
  double x[2];
  for (int n = 0; n < samples; ++n) {
    x[0] = uniform01(rng);
    x[1] = uniform01(rng);
    for (int j = 0; j < th.kappa1(); ++j) {
      const double v = fr.psi(j, {x, 2});
      sum[j] += v;
      sum2[j] += v * v;
    }
  }
  for (int j = 0; j < th.kappa1(); ++j) {
    const double exact = Gauss::integrate([&](double s) { return th(j, {&s, 1}); }, 0.0, 0.5) +
                         Gauss::integrate([&](double s) { return th(j, {&s, 1}); }, 0.5, 1.0);
    const double mean = sum[j] / samples;
    const double se = std::sqrt((sum2[j] / samples - mean * mean) / samples);
    EXPECT_LE(std::abs(mean - exact), 3.0 * se + 1e-12) << "j=" << j;
  }
}

TEST(Theta, ConstantsReproduced) {
  // S of the constant 1 expressed in the level-1 basis: coefficient 1 on every psi_j
  for (int r : {1, 2, 3}) {
    const LagrangeBasis basis(r, 2);
    const ThetaSet th = s_theta(basis, 1, 1);
    for (double s : {0.0, 0.2, 0.5, 0.77, 1.0}) {
      double v = 0.0;
      for (int j = 0; j < th.kappa1(); ++j) v += th(j, {&s, 1});
      EXPECT_NEAR(v, 1.0, 1e-13) << "r=" << r;
    }
  }
}

TEST(VOperator, ZeroAndUnitVectors) {
  const LagrangeBasis basis(2, 2);
  const ThetaSet th = s_theta(basis, 1, 1);
  const int l = 2;
  const std::int64_t len = th.kappa1() * cell_count(l, 1);
  const std::vector<double> zero(len, 0.0);
  const auto z = v_operator(zero, l, th);
  for (double s : {0.0, 0.33, 1.0}) EXPECT_EQ(z({&s, 1}), 0.0);
  EXPECT_THROW(v_operator(std::vector<double>(len - 1, 0.0), l, th), std::invalid_argument);

  Rng rng = make_rng(23);
  for (std::int64_t i1 = 0; i1 < 4; ++i1) {
    for (int j = 0; j < th.kappa1(); ++j) {
      std::vector<double> g(len, 0.0);
      g[i1 * th.kappa1() + j] = 1.0;
      const auto v = v_operator(g, l, th);
      for (int t = 0; t < 20; ++t) {
        const double s = uniform01(rng);
        const std::int64_t cell = detail::locate(l, {&s, 1});
        const double local = std::ldexp(s, l) - static_cast<double>(cell);
        const double expect = cell == i1 ? th(j, {&local, 1}) : 0.0;
        EXPECT_NEAR(v({&s, 1}), expect, 1e-14);
      }
    }
  }
}

TEST(VOperator, NormStability) {
  const LagrangeBasis basis(2, 2);
  const ThetaSet th = s_theta(basis, 1, 1);
  const int l = 2;
  const std::int64_t len = th.kappa1() * cell_count(l, 1);
  Rng rng = make_rng(24);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> g(len);
    for (double& v : g) v = 2.0 * uniform01(rng) - 1.0;
    const auto v = v_operator(g, l, th);
    for (const char* qs : {"1", "2", "inf"}) {
      const Exponent q = Exponent::parse(qs);
      double norm = 0.0;
      const int pieces = 1 << (l + 1);
      if (q.is_infinite()) {
        for (int k = 0; k <= 4096; ++k) {
          const double s = std::min(k / 4096.0, 1.0);
          norm = std::max(norm, std::abs(v({&s, 1})));
        }
      } else {
        for (int c = 0; c < pieces; ++c)
          norm += Gauss::integrate([&](double s) { return std::pow(std::abs(v({&s, 1})), q.value()); },
                                   double(c) / pieces, double(c + 1) / pieces);
        norm = std::pow(norm, 1.0 / q.value());
      }
      worst = std::max(worst, norm / discrete_norm(g, q));
    }
  }
  EXPECT_LE(worst, 10.0);
}

TEST(BaseTerm, ConstantAndPolynomials) {
  Rng rng = make_rng(25);
  for (int r : {1, 2, 3}) {
    for (auto [d1, d2] : {std::pair{1, 1}, std::pair{1, 2}, std::pair{2, 1}}) {
      const LagrangeBasis basis(r, d1 + d2);
      const Point rho = draw_shift(ShiftMode::uniform, d1 + d2, rng);
      std::int64_t evals = 0;
      const auto one = base_term(basis, d1, d2, 2, rho, [](std::span<const double>) { return 1.0; }, &evals);
      EXPECT_EQ(evals, basis.kappa() * cell_count(2, d1 + d2));
      const RandomPolynomial f(r - 1, d1 + d2, rng);
      const auto pf = base_term(basis, d1, d2, 2, rho, f);
      for (int t = 0; t < 20; ++t) {
        const Point s = fixtures::random_point(d1, rng);
        EXPECT_NEAR(one(s), 1.0, 1e-13);
        EXPECT_NEAR(pf(s), poly_param_integral(f, d1, s.view()), 1e-12);
      }
    }
  }
}

TEST(BaseTerm, HandEvaluationPiecewiseConstant) {
  // r = 1: value on s-cell i1 is 2^{-l0} sum_{i2} f(s_{i1} + 2^{-l0} delta rho_1, s_{i2} + 2^{-l0} delta rho_2)
  const LagrangeBasis basis(1, 2);
  const Point rho{0.3, 0.8};
  auto f = [](std::span<const double> x) { return std::exp(x[0]) * std::cos(3 * x[1]); };
  const auto b = base_term(basis, 1, 1, 2, rho, f);
  const int i1 = 2;
  double expect = 0.0;
  for (int i2 = 0; i2 < 4; ++i2) {
    const double x[2] = {(i1 + 0.5 * 0.3) / 4.0, (i2 + 0.5 * 0.8) / 4.0};
    expect += f({x, 2}) / 4.0;
  }
  const double s = 0.6;
  EXPECT_NEAR(b({&s, 1}), expect, 1e-15);
}

TEST(UOperator, AnnihilatesConstants) {
  Rng rng = make_rng(26);
  for (int r : {1, 2, 3}) {
    const LagrangeBasis basis(r, 2);
    const DetailFrame fr = detail_frame(basis, draw_shift(ShiftMode::uniform, 2, rng));
    auto c = [](std::span<const double>) { return 2.5; };
    const UTensor u(fr, 3, 1, 1, c);
    EXPECT_EQ(u.rows(), fr.kappa1 * 8);
    EXPECT_EQ(u.cols(), 8);
    for (std::int64_t i = 0; i < u.rows(); ++i)
      for (std::int64_t j = 0; j < u.cols(); ++j) EXPECT_NEAR(u(i, j), 0.0, 1e-13);
  }
}

TEST(UOperator, DecompositionIdentity) {
  // V_l(exact_mean(U_l f)) = S P'_l f on a 256-point s-grid
  Rng rng = make_rng(27);
  const int l = 2;
  for (int r : {1, 2}) {
    const LagrangeBasis basis(r, 2);
    const DetailFrame fr = detail_frame(basis, draw_shift(ShiftMode::uniform, 2, rng));
    const ThetaSet th = s_theta(basis, 1, 1);
    const RandomSmooth f(2, rng);
    const UTensor u(fr, l, 1, 1, f);
    const auto mean = exact_mean(u);
    const auto v = v_operator(mean.row_means, l, th);
    const DetailExpansion dx = detail_apply(fr, l, f);
    double worst = 0.0;
    for (int k = 0; k < 256; ++k) {
      const double s = (k + 0.5) / 256.0;
      const double oracle = integrate_t([&](std::span<const double> x) { return dx(x); }, s, l + 1);
      worst = std::max(worst, std::abs(v({&s, 1}) - oracle));
    }
    EXPECT_LE(worst, 1e-9) << "r=" << r;
  }
}

TEST(UOperator, NormDecaysLikeTwoToMinusRl) {
  Rng rng = make_rng(28);
  const Exponent p = Exponent::parse("2");
  for (int r : {1, 2}) {
    const LagrangeBasis basis(r, 2);
    const DetailFrame fr = detail_frame(basis, draw_shift(ShiftMode::uniform, 2, rng));
    auto f = [](std::span<const double> x) { return std::cos(M_PI * x[0]) * std::sin(M_PI * x[1]); };
    std::vector<double> xs, ys;
    for (int l = 1; l <= 6; ++l) {
      const UTensor u(fr, l, 1, 1, f);
      DenseTensor d(u.rows(), u.cols());
      for (std::int64_t i = 0; i < u.rows(); ++i)
        for (std::int64_t j = 0; j < u.cols(); ++j) d.at(i, j) = u(i, j);
      xs.push_back(l);
      ys.push_back(std::log2(discrete_norm(d, p)));
    }
    double mx = 0, my = 0;
    for (std::size_t a = 0; a < xs.size(); ++a) mx += xs[a] / xs.size(), my += ys[a] / ys.size();
    double sxy = 0, sxx = 0;
    for (std::size_t a = 0; a < xs.size(); ++a) sxy += (xs[a] - mx) * (ys[a] - my), sxx += (xs[a] - mx) * (xs[a] - mx);
    EXPECT_LE(sxy / sxx, -0.85 * r) << "r=" << r;
  }
}

TEST(UOperator, UnbiasedDetailEstimates) {
  Rng rng = make_rng(29);
  const LagrangeBasis basis(1, 2);
  const DetailFrame fr = detail_frame(basis, draw_shift(ShiftMode::uniform, 2, rng));
  const RandomSmooth f(2, rng);
  const UTensor u(fr, 1, 1, 1, f);
  const auto exact = exact_mean(u);
  const int runs = 10000;
  std::vector<double> s(u.rows(), 0.0), s2(u.rows(), 0.0);
  for (int t = 0; t < runs; ++t) {
    const auto m = mc_mean_nonadaptive(u, u.rows(), rng);
    for (std::int64_t i = 0; i < u.rows(); ++i) s[i] += m.row_means[i], s2[i] += m.row_means[i] * m.row_means[i];
  }
  for (std::int64_t i = 0; i < u.rows(); ++i) {
    const double mean = s[i] / runs, var = s2[i] / runs - mean * mean;
    if (var < 1e-30) {
      EXPECT_NEAR(mean, exact.row_means[i], 1e-14);
      continue;
    }
    EXPECT_LE(std::abs(mean - exact.row_means[i]) / std::sqrt(var / runs), 4.0) << "row " << i;
  }
}

TEST(Output, Linearity) {
  Rng rng = make_rng(30);
  const auto s = spec(2, "2", "2", 1, 1);
  const RandomSmooth f(2, rng), g(2, rng);
  const auto a = run_a4(s, 64, f, 1).output;
  const auto b = run_a4(s, 64, g, 2).output;
  const auto c = a.axpy(-1.7, b);
  for (int t = 0; t < 100; ++t) {
    const double x = uniform01(rng);
    EXPECT_NEAR(c({&x, 1}), -1.7 * a({&x, 1}) + b({&x, 1}), 1e-12);
  }
  MultilevelOutput zero{1, {}};
  const double x = 0.4;
  EXPECT_EQ(zero({&x, 1}), 0.0);
}

TEST(RunA4, ConstantsAndZero) {
  const auto s = spec(1, "2", "2", 1, 1);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto one = run_a4(s, 256, [](std::span<const double>) { return 1.0; }, seed);
    for (double x : {0.0, 0.21, 0.5, 0.99, 1.0}) EXPECT_NEAR(one.output({&x, 1}), 1.0, 1e-13);
    for (std::size_t k = 1; k < one.output.parts.size(); ++k)
      for (double c : one.output.parts[k].coeffs) EXPECT_NEAR(c, 0.0, 1e-14);
    const auto zero = run_a4(s, 256, [](std::span<const double>) { return 0.0; }, seed);
    for (const auto& part : zero.output.parts)
      for (double c : part.coeffs) EXPECT_EQ(c, 0.0);
  }
}

TEST(RunA5, ConstantsAndZero) {
  const auto s = spec(1, "4", "inf", 1, 1);
  for (std::uint64_t seed : {4u, 5u}) {
    const auto one = run_a5(s, 256, [](std::span<const double>) { return 1.0; }, seed);
    for (double x : {0.0, 0.37, 1.0}) EXPECT_NEAR(one.output({&x, 1}), 1.0, 1e-13);
    const auto zero = run_a5(s, 256, [](std::span<const double>) { return 0.0; }, seed);
    for (const auto& part : zero.output.parts)
      for (double c : part.coeffs) EXPECT_EQ(c, 0.0);
  }
  EXPECT_THROW(run_a5(spec(1, "2", "inf", 1, 1), 256, [](std::span<const double>) { return 0.0; }, 1), InvalidProblem);
  EXPECT_THROW(run_a5(spec(1, "4", "4", 1, 1), 256, [](std::span<const double>) { return 0.0; }, 1), InvalidProblem);
}

TEST(Runs, ExactOnPolynomials) {
  Rng rng = make_rng(31);
  for (int r : {1, 2, 3}) {
    const RandomPolynomial f(r - 1, 2, rng);
    const auto s4 = spec(r, "2", "2", 1, 1);
    const auto s5 = spec(r, "4", "8", 1, 1);
    const auto sd = spec(r, "inf", "inf", 1, 1);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto a = run_a4(s4, 128, f, seed);
      const auto b = run_a5(s5, 128, f, seed);
      const auto c = run_deterministic(sd, 128, f);
      for (int t = 0; t < 20; ++t) {
        const double x = uniform01(rng);
        const double exact = poly_param_integral(f, 1, {&x, 1});
        EXPECT_NEAR(a.output({&x, 1}), exact, 1e-12);
        EXPECT_NEAR(b.output({&x, 1}), exact, 1e-12);
        EXPECT_NEAR(c.output({&x, 1}), exact, 1e-12);
      }
    }
  }
}

TEST(Runs, LedgerMatchesCountingWrapper) {
  Rng rng = make_rng(32);
  const RandomSmooth g(2, rng);
  for (auto alg : {Algorithm::a4, Algorithm::a5, Algorithm::det}) {
    for (int r : {1, 2}) {
      const auto s = spec(r, "4", "inf", 1, 1);
      for (std::int64_t n : {64, 300, 1024}) {
        CountingFn f{[&](std::span<const double> x) { return g(x); }};
        const auto res = run(alg, s, n, f, 7);
        EXPECT_EQ(res.ledger.total, f.calls);
        EXPECT_LE(res.ledger.total, res.ledger.bound);
        EXPECT_EQ(res.ledger.total, predicted_ledger(alg, s, n)) << to_string(alg) << " r=" << r << " n=" << n;
      }
    }
  }
}

TEST(Runs, CostConstantFrozen) {
  // total evaluations <= C n log(n+1)^beta1 with C measured over n <= 2^22
  struct Case {
    ProblemSpec s;
    double c;
  };
  const Case cases[] = {{spec(1, "2", "2", 1, 1), 36.0},
                        {spec(1, "4", "inf", 1, 1), 53.0},
                        {spec(1, "1", "inf", 1, 1), 9.0},
                        {spec(1, "3", "4", 2, 1), 282.0}};
  for (const auto& [s, c] : cases) {
    const int b = beta1(s);
    for (std::int64_t n = std::max<std::int64_t>(2, minimal_budget(s)); n <= (std::int64_t{1} << 22); n *= 2) {
      const double bound = c * static_cast<double>(n) * std::pow(std::log(n + 1.0), b);
      EXPECT_LE(static_cast<double>(predicted_ledger(Algorithm::a4, s, n)), bound) << s.str() << " n=" << n;
    }
  }
  // the prediction is the count of an actual run
  Rng rng = make_rng(35);
  const RandomSmooth g(2, rng);
  CountingFn f{[&](std::span<const double> x) { return g(x); }};
  const auto res = run_a4(spec(1, "1", "inf", 1, 1), 4096, f, 3);
  EXPECT_EQ(res.ledger.total, f.calls);
  EXPECT_EQ(f.calls, predicted_ledger(Algorithm::a4, spec(1, "1", "inf", 1, 1), 4096));
}

TEST(RunA5, LevelCaps) {
  Rng rng = make_rng(33);
  const RandomSmooth g(2, rng);
  const auto s = spec(1, "4", "8", 1, 1);
  const auto res = run_a5(s, 4096, g, 11);
  const auto& sc = res.schedule;
  const LagrangeBasis basis(1, 2);
  for (int l = sc.l0; l < sc.l1; ++l) {
    const int m = repetitions(l, s, 1.0, 4 * basis.kappa());
    EXPECT_LE(res.ledger.level_queries[l - sc.l0], 6 * m * sc.budget(l));
  }
}

TEST(Runs, Reproducible) {
  Rng rng = make_rng(34);
  const RandomSmooth g(2, rng);
  const auto s = spec(1, "4", "inf", 1, 1);
  const auto a = run_a5(s, 512, g, 99), b = run_a5(s, 512, g, 99), c = run_a5(s, 512, g, 100);
  ASSERT_EQ(a.output.parts.size(), b.output.parts.size());
  for (std::size_t k = 0; k < a.output.parts.size(); ++k) EXPECT_EQ(a.output.parts[k].coeffs, b.output.parts[k].coeffs);
  EXPECT_NE(a.output.parts[0].coeffs, c.output.parts[0].coeffs);
  const auto d1 = run_deterministic(spec(2, "2", "2", 1, 1), 500, g);
  const auto d2 = run_deterministic(spec(2, "2", "2", 1, 1), 500, g);
  EXPECT_EQ(d1.output.parts[0].coeffs, d2.output.parts[0].coeffs);
}

TEST(Deterministic, RequiresEmbedding) {
  auto f = [](std::span<const double>) { return 1.0; };
  EXPECT_THROW(run_deterministic(spec(1, "2", "2", 1, 1), 64, f), InvalidProblem);
  EXPECT_NO_THROW(run_deterministic(spec(2, "1", "2", 1, 1), 64, f));
  EXPECT_THROW(run_deterministic(spec(1, "1", "2", 1, 1), 64, f), InvalidProblem);
  EXPECT_EQ(run_deterministic(spec(2, "2", "2", 1, 1), 64, f).schedule.l0, 3);
  EXPECT_EQ(run_deterministic(spec(2, "2", "2", 1, 1), 65, f).schedule.l0, 4);
}
