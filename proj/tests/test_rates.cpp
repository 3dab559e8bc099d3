#include "paramint/rates.hpp"

#include "paramint/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace paramint;

namespace {

ProblemSpec spec(int r, const char* p, const char* q, int d1, int d2) { return make_problem(r, p, q, d1, d2); }

/// Random problem with 2 < p < q <= inf and rational reciprocals.
ProblemSpec random_gap_spec(Rng& rng) {
  for (;;) {
    const int den = 2 + static_cast<int>(rng() % 24);
    const int a = static_cast<int>(rng() % den);       // 1/q numerator
    const int b = static_cast<int>(rng() % den);       // 1/p numerator
    ProblemSpec s;
    s.q = Exponent::from_reciprocal(Rational(std::min(a, b), den));
    s.p = Exponent::from_reciprocal(Rational(std::max(a, b), den));
    s.d1 = 1 + static_cast<int>(rng() % 4);
    s.d2 = 1 + static_cast<int>(rng() % 4);
    s.r = static_cast<int>(rng() % 9);
    if (adaptive_regime(s) && solvable_check(s)) return s;
  }
}

}  // namespace

TEST(Embedding, Examples) {
  EXPECT_TRUE(embedding_check(1, Exponent::parse("1"), 1));
  EXPECT_FALSE(embedding_check(1, Exponent::parse("2"), 2));
  EXPECT_TRUE(embedding_check(2, Exponent::infinity(), 2));
  EXPECT_FALSE(embedding_check(0, Exponent::parse("1"), 1));
}

TEST(Solvable, Examples) {
  EXPECT_TRUE(solvable_check(spec(1, "2", "2", 1, 1)));
  EXPECT_TRUE(compact_check(spec(1, "2", "2", 1, 1)));
  EXPECT_TRUE(solvable_check(spec(0, "2", "2", 1, 1)));
  EXPECT_FALSE(compact_check(spec(0, "2", "2", 1, 1)));
  EXPECT_FALSE(solvable_check(spec(1, "2", "inf", 2, 1)));
  EXPECT_TRUE(solvable_check(spec(1, "inf", "inf", 2, 1)));
  EXPECT_TRUE(solvable_check(spec(1, "1", "inf", 1, 1)));
  EXPECT_FALSE(solvable_check(spec(0, "1", "2", 1, 1)));
}

TEST(Flags, Examples) {
  const auto s = spec(1, "2", "2", 1, 1);
  EXPECT_EQ(sigma1(s), 0);
  EXPECT_EQ(beta1(s), 0);
  EXPECT_EQ(phi1_branch(s), 1);
  EXPECT_EQ(sigma1(spec(1, "inf", "inf", 1, 1)), 1);
  // r/d1 = 1/2 = 1 - 1/2 + 0
  EXPECT_EQ(beta1(spec(1, "2", "2", 2, 1)), 1);
  const auto g = spec(1, "4", "inf", 1, 1);
  EXPECT_EQ(beta2(g), 1);
  EXPECT_FALSE(b7_holds(g));
  EXPECT_EQ(sigma2(g), 1);
  EXPECT_EQ(sigma2(spec(1, "4", "8", 1, 1)), 0);
}

TEST(Phi1, Examples) {
  EXPECT_EQ(phi1_exponent(spec(1, "2", "2", 1, 1)), (RateExponent{Rational(-3, 4), Rational(0)}));
  EXPECT_EQ(phi1_exponent(spec(1, "inf", "inf", 1, 1)), (RateExponent{Rational(-3, 4), Rational(1, 2)}));
  EXPECT_NEAR(phi1(4096.0, spec(1, "2", "2", 1, 1)), std::pow(4096.0, -0.75), 1e-15);
  // r/d1 = (1/p - 1/q)_+ boundary: Phi_1 = 1
  const auto b = spec(1, "1", "inf", 1, 1);
  EXPECT_EQ(phi1_branch(b), 2);
  EXPECT_EQ(phi1(1.0, b), 1.0);
  EXPECT_EQ(phi1(1000.0, b), 1.0);
}

TEST(Phi2, Examples) {
  const auto g = spec(1, "4", "inf", 1, 1);
  EXPECT_EQ(phi2_exponent(g).n_exp, Rational(-3, 4));
  EXPECT_EQ(phi2_branch(g).str(), "B8.2");
  const auto h = spec(3, "4", "inf", 1, 2);
  EXPECT_TRUE(b7_holds(h));
  EXPECT_EQ(phi2_exponent(h).n_exp, Rational(-4, 3));
  EXPECT_THROW(phi2_exponent(spec(1, "2", "4", 1, 1)), InvalidProblem);
  EXPECT_THROW(phi2_exponent(spec(1, "4", "4", 1, 1)), InvalidProblem);
}

TEST(Gap, Examples) {
  EXPECT_EQ(gap_exponent(spec(1, "4", "inf", 1, 1)), Rational(1, 8));
  EXPECT_EQ(gap_exponent(spec(1, "3", "4", 2, 1)), Rational(0));
  EXPECT_EQ(gap_exponent(spec(1, "4", "inf", 1, 2)), Rational(1, 12));
  EXPECT_EQ(gap_exponent(spec(5, "4", "inf", 3, 3)), Rational(1, 8));
  EXPECT_THROW(gap_exponent(spec(1, "2", "inf", 1, 1)), InvalidProblem);
}

TEST(Gap, EqualsPhiExponentDifference) {
  Rng rng = make_rng(1);
  for (int t = 0; t < 2000; ++t) {
    const ProblemSpec s = random_gap_spec(rng);
    ASSERT_EQ(gap_exponent(s), phi1_exponent(s).n_exp - phi2_exponent(s).n_exp) << s.str();
  }
}

TEST(Gap, MaximumIsOneEighth) {
  Rng rng = make_rng(2);
  for (int t = 0; t < 10000; ++t) {
    const ProblemSpec s = random_gap_spec(rng);
    const Rational th = gap_exponent(s);
    ASSERT_LE(th, Rational(1, 8)) << s.str();
    ASSERT_GE(th, Rational(0)) << s.str();
    const bool maximizer = s.p.inv() == Rational(1, 4) && s.q.is_infinite() && s.d1 == s.d2 && s.r >= s.d1;
    ASSERT_EQ(th == Rational(1, 8), maximizer) << s.str();
  }
}

TEST(Gap, LogRatioSlope) {
  Rng rng = make_rng(3);
  for (int t = 0; t < 200; ++t) {
    const ProblemSpec s = random_gap_spec(rng);
    // power parts only; both Phi are pure powers when sigma1 = 0
    const double a = std::log2(phi1(std::ldexp(1.0, 10), s) / phi2(std::ldexp(1.0, 10), s));
    const double b = std::log2(phi1(std::ldexp(1.0, 30), s) / phi2(std::ldexp(1.0, 30), s));
    EXPECT_NEAR((b - a) / 20.0, to_double(gap_exponent(s)), 1e-9);
  }
}

TEST(Phi1, BranchContinuity) {
  // at r/d1 = threshold both branch formulas agree
  Rng rng = make_rng(4);
  int hits = 0;
  for (int t = 0; t < 20000 && hits < 200; ++t) {
    const int den = 1 + static_cast<int>(rng() % 12);
    ProblemSpec s;
    s.p = Exponent::from_reciprocal(Rational(static_cast<int>(rng() % (den + 1)), den));
    s.q = Exponent::from_reciprocal(Rational(static_cast<int>(rng() % (den + 1)), den));
    s.d1 = 1 + static_cast<int>(rng() % 6);
    s.d2 = 1 + static_cast<int>(rng() % 4);
    const Rational r = phi1_threshold(s) * s.d1;
    if (r.denominator() != 1) continue;
    s.r = static_cast<int>(r.numerator());
    ++hits;
    const Rational plus = positive_part(s.p.inv() - s.q.inv());
    const Rational b1 = (Rational(-s.r) + plus * s.d1 - (Rational(1) - p_bar_inv(s)) * s.d2) / s.d();
    const Rational b2 = -Rational(s.r, s.d1) + plus;
    ASSERT_EQ(b1, b2) << s.str();
    ASSERT_EQ(beta1(s), 1);
  }
  EXPECT_GT(hits, 20);
}

TEST(Phi2, ConsistencyIdentities) {
  Rng rng = make_rng(5);
  for (int t = 0; t < 1000; ++t) {
    const ProblemSpec s = random_gap_spec(rng);
    const auto c = phi2_candidates(s);
    const Rational rd(s.r, s.d1);
    const Rational pq = s.p.inv() - s.q.inv();
    const Rational half(1, 2);
    const Rational lhs4 = (half - s.p.inv()) * s.d2, rhs4 = pq * s.d1;
    const Rational mid = Rational(1) - s.q.inv();
    // (C4A)
    ASSERT_EQ(c.smooth >= c.mixed, mid >= c7_threshold(s));
    ASSERT_EQ(mid >= c7_threshold(s), lhs4 >= rhs4);
    ASSERT_EQ(c.smooth == c.mixed, lhs4 == rhs4);
    ASSERT_EQ(mid == c7_threshold(s), lhs4 == rhs4);
    // (C5A)
    ASSERT_EQ(c.smooth >= c.parameter, rd >= c7_threshold(s));
    ASSERT_EQ(c.smooth == c.parameter, rd == c7_threshold(s));
    // (C6A)
    ASSERT_EQ(c.mixed >= c.parameter, rd >= mid);
    ASSERT_EQ(c.mixed == c.parameter, rd == mid);
  }
}

TEST(Envelopes, Examples) {
  const auto e = theory_envelopes(1024.0, spec(2, "2", "2", 1, 1));
  ASSERT_TRUE(e.det.has_value());
  EXPECT_NEAR(*e.det, 1.0 / 1024.0, 1e-18);
  const auto g = spec(1, "4", "inf", 1, 1);
  const auto eg = theory_envelopes(std::ldexp(1.0, 20), g);
  EXPECT_NEAR(eg.ran_non_lower, std::pow(2.0, -20 * 5.0 / 8.0), 1e-15);
  EXPECT_NEAR(eg.ran_lower / std::sqrt(std::log2(std::ldexp(1.0, 20) + 1.0)), std::pow(2.0, -15.0), 1e-15);
  for (const auto& s : {spec(1, "2", "2", 1, 1), spec(2, "3", "3", 2, 1), spec(1, "4", "8", 1, 1)}) {
    const auto one = theory_envelopes(1.0, s);
    EXPECT_EQ(one.ran_non_lower, 1.0);
    if (one.det) {
      EXPECT_EQ(*one.det, 1.0);
    }
  }
  EXPECT_THROW(theory_envelopes(4.0, spec(0, "1", "2", 1, 1)), InvalidProblem);
}

TEST(Report, Fields) {
  const auto r = regime_report(spec(1, "4", "inf", 1, 1));
  EXPECT_TRUE(r.adaptive);
  ASSERT_TRUE(r.theta.has_value());
  EXPECT_EQ(*r.theta, Rational(1, 8));
  EXPECT_FALSE(r.embedded == false && r.det.has_value());
  const auto q = regime_report(spec(1, "2", "2", 1, 1));
  EXPECT_FALSE(q.adaptive);
  EXPECT_FALSE(q.theta.has_value());
  EXPECT_EQ(q.phi1_branch, 1);
}
