#pragma once

// Regime flags and rate envelopes for parametric integration
// S : W_p^r([0,1]^{d1+d2}) -> L_q([0,1]^{d1}).
//
// Every exponent is an exact rational in 1/p, 1/q, r and the dimensions.
// Envelopes are written as n^a (log2(n+1))^b with unit constants.

#include "paramint/problem.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace paramint {

/// n^{n_exp} (log2(n+1))^{log_exp}
struct RateExponent {
  Rational n_exp{0};
  Rational log_exp{0};

  double operator()(double n) const {
    return std::pow(n, to_double(n_exp)) * std::pow(std::log2(n + 1.0), to_double(log_exp));
  }
  friend bool operator==(const RateExponent& a, const RateExponent& b) {
    return a.n_exp == b.n_exp && a.log_exp == b.log_exp;
  }
};

namespace detail {

inline Rational r_over_d1(const ProblemSpec& s) { return Rational(s.r, s.d1); }
inline Rational gap_pq(const ProblemSpec& s) { return s.p.inv() - s.q.inv(); }  // 1/p - 1/q
inline Rational gap_pq_plus(const ProblemSpec& s) { return positive_part(gap_pq(s)); }
inline Rational half() { return Rational(1, 2); }

}  // namespace detail

/// p-bar = min(p, 2), returned through its reciprocal max(1/p, 1/2).
inline Rational p_bar_inv(const ProblemSpec& s) { return std::max(s.p.inv(), detail::half()); }

inline bool embedding_check(int r, const Exponent& p, int d) {
  const Rational rd(r, d);
  if (p.inv() == Rational(1)) return rd >= Rational(1);
  return rd > p.inv();
}

inline bool embedding_check(const ProblemSpec& s) { return embedding_check(s.r, s.p, s.d()); }

/// S is well defined and bounded into L_q.
inline bool solvable_check(const ProblemSpec& s) {
  const Rational rd = detail::r_over_d1(s);
  if (!s.q.is_infinite()) return rd >= detail::gap_pq_plus(s);
  if (s.p.is_infinite() || s.p.inv() == Rational(1)) return rd >= s.p.inv();
  return rd > s.p.inv();
}

inline bool compact_check(const ProblemSpec& s) { return detail::r_over_d1(s) > detail::gap_pq_plus(s); }

inline int sigma1(const ProblemSpec& s) { return s.p.is_infinite() && s.q.is_infinite() ? 1 : 0; }

/// Threshold 1 - 1/p-bar + (1/p - 1/q)_+ separating the two branches of Phi_1.
inline Rational phi1_threshold(const ProblemSpec& s) {
  return Rational(1) - p_bar_inv(s) + detail::gap_pq_plus(s);
}

inline int beta1(const ProblemSpec& s) { return detail::r_over_d1(s) == phi1_threshold(s) ? 1 : 0; }

/// 2 < p < q: the regime where adaption can help.
inline bool adaptive_regime(const ProblemSpec& s) {
  return s.p.inv() < detail::half() && s.q.inv() < s.p.inv();
}

/// (1/2 - 1/p) d2 > (1/p - 1/q) d1
inline bool b7_holds(const ProblemSpec& s) {
  return (detail::half() - s.p.inv()) * s.d2 > detail::gap_pq(s) * s.d1;
}

inline int beta2(const ProblemSpec& s) {
  if (!adaptive_regime(s)) return 0;
  return !b7_holds(s) && detail::r_over_d1(s) == Rational(1) - s.q.inv() ? 1 : 0;
}

/// (1/p - 1/q)(d1/d2 + 1) + 1/2
inline Rational c7_threshold(const ProblemSpec& s) {
  return detail::gap_pq(s) * (Rational(s.d1, s.d2) + Rational(1)) + detail::half();
}

inline int sigma2(const ProblemSpec& s) {
  if (!adaptive_regime(s)) return 0;
  const bool a = (detail::half() - s.p.inv()) * s.d2 >= detail::gap_pq(s) * s.d1;
  const bool b = detail::r_over_d1(s) >= c7_threshold(s);
  return a && b && s.q.is_infinite() ? 1 : 0;
}

/// 1 if r/d1 exceeds the Phi_1 threshold, 2 otherwise.
inline int phi1_branch(const ProblemSpec& s) { return detail::r_over_d1(s) > phi1_threshold(s) ? 1 : 2; }

inline RateExponent phi1_exponent(const ProblemSpec& s) {
  const Rational plus = detail::gap_pq_plus(s);
  const int sg = sigma1(s);
  if (phi1_branch(s) == 1) {
    const Rational e = (Rational(-s.r) + plus * s.d1 - (Rational(1) - p_bar_inv(s)) * s.d2) / s.d();
    return {e, Rational(sg, 2)};
  }
  const Rational e = -detail::r_over_d1(s) + plus;
  return {e, Rational(sg) * (detail::r_over_d1(s) - plus)};
}

inline double phi1(double n, const ProblemSpec& s) { return phi1_exponent(s)(n); }

/// Which of the four Phi_2 formulas applies.
struct Phi2Branch {
  bool b7 = false;     // first family (B7) or second (B8)
  bool first = false;  // first (strict) case inside the family
  std::string str() const {
    return std::string(b7 ? "B7" : "B8") + (first ? ".1" : ".2");
  }
};

inline Phi2Branch phi2_branch(const ProblemSpec& s) {
  if (!adaptive_regime(s)) throw InvalidProblem("Phi_2 requires 2 < p < q");
  Phi2Branch b;
  b.b7 = b7_holds(s);
  b.first = b.b7 ? detail::r_over_d1(s) > c7_threshold(s) : detail::r_over_d1(s) > Rational(1) - s.q.inv();
  return b;
}

/// n exponents of the three Phi_2 candidate rates.
struct Phi2Candidates {
  Rational smooth;     // (-r - d2/2)/(d1+d2)
  Rational mixed;      // (-r + (1/p-1/q) d1 - (1-1/p) d2)/(d1+d2)
  Rational parameter;  // -r/d1 + 1/p - 1/q
};

inline Phi2Candidates phi2_candidates(const ProblemSpec& s) {
  const Rational pq = detail::gap_pq(s);
  return {(Rational(-s.r) - Rational(s.d2, 2)) / s.d(),
          (Rational(-s.r) + pq * s.d1 - (Rational(1) - s.p.inv()) * s.d2) / s.d(),
          -detail::r_over_d1(s) + pq};
}

inline RateExponent phi2_exponent(const ProblemSpec& s) {
  const Phi2Branch b = phi2_branch(s);
  const Phi2Candidates c = phi2_candidates(s);
  if (b.b7) return {b.first ? c.smooth : c.parameter, Rational(0)};
  return {b.first ? c.mixed : c.parameter, Rational(0)};
}

inline double phi2(double n, const ProblemSpec& s) { return phi2_exponent(s)(n); }

/// Exponent of the deterministic rate, (-r + d1 (1/p-1/q)_+)/(d1+d2).
inline Rational det_exponent(const ProblemSpec& s) {
  return (Rational(-s.r) + detail::gap_pq_plus(s) * s.d1) / s.d();
}

/// Principal exponent of the non-adaptive / adaptive gap, by the case table.
inline Rational gap_exponent(const ProblemSpec& s) {
  if (!adaptive_regime(s)) throw InvalidProblem("gap exponent requires 2 < p < q");
  if (!solvable_check(s)) throw InvalidProblem("problem is not solvable");
  const Rational rd = detail::r_over_d1(s);
  const Rational pq = detail::gap_pq(s);
  const Rational low = pq + detail::half();
  if (rd <= low) return Rational(0);
  const Rational middle = (rd - low) * s.d2 / s.d();
  if (b7_holds(s)) return rd <= c7_threshold(s) ? middle : pq * s.d1 / s.d();
  return rd <= Rational(1) - s.q.inv() ? middle : (detail::half() - s.p.inv()) * s.d2 / s.d();
}

/// Upper and lower envelopes of the minimal errors at budget n.
struct Envelopes {
  double ran_non_lower = 0.0;  // Phi_1
  double ran_non_upper = 0.0;  // Phi_1 log^{beta1(2 - 1/p-bar)}
  double ran_lower = 0.0;      // Phi_2 log^{sigma2/2} in the adaptive regime, else Phi_1
  double ran_upper = 0.0;      // Phi_2(n/log) log^{beta2(2-1/p)} in the adaptive regime
  std::optional<double> det;   // only under the embedding condition
};

inline Envelopes theory_envelopes(double n, const ProblemSpec& s) {
  if (!solvable_check(s)) throw InvalidProblem("problem is not solvable");
  Envelopes e;
  const double lg = std::log2(n + 1.0);
  e.ran_non_lower = phi1(n, s);
  e.ran_non_upper = e.ran_non_lower * std::pow(lg, beta1(s) * (2.0 - to_double(p_bar_inv(s))));
  if (adaptive_regime(s)) {
    e.ran_lower = phi2(n, s) * std::pow(lg, sigma2(s) / 2.0);
    e.ran_upper = phi2(n / lg, s) * std::pow(lg, beta2(s) * (2.0 - to_double(s.p.inv())));
  } else {
    e.ran_lower = e.ran_non_lower;
    e.ran_upper = e.ran_non_upper;
  }
  if (embedding_check(s)) e.det = std::pow(n, to_double(det_exponent(s)));
  return e;
}

struct RegimeReport {
  Rational p_bar_inv;
  int sigma1 = 0, beta1 = 0, beta2 = 0, sigma2 = 0;
  bool embedded = false, solvable = false, compact = false;
  bool adaptive = false;
  int phi1_branch = 0;
  RateExponent phi1;
  std::optional<Phi2Branch> phi2_branch;
  std::optional<RateExponent> phi2;
  std::optional<Rational> theta;
  std::optional<Rational> det;
};

inline RegimeReport regime_report(const ProblemSpec& s) {
  s.validate();
  RegimeReport r;
  r.p_bar_inv = p_bar_inv(s);
  r.sigma1 = sigma1(s);
  r.beta1 = beta1(s);
  r.beta2 = beta2(s);
  r.sigma2 = sigma2(s);
  r.embedded = embedding_check(s);
  r.solvable = solvable_check(s);
  r.compact = compact_check(s);
  r.adaptive = adaptive_regime(s);
  r.phi1_branch = phi1_branch(s);
  r.phi1 = phi1_exponent(s);
  if (r.adaptive) {
    r.phi2_branch = phi2_branch(s);
    r.phi2 = phi2_exponent(s);
    if (r.solvable) r.theta = gap_exponent(s);
  }
  if (r.embedded) r.det = det_exponent(s);
  return r;
}

}  // namespace paramint
