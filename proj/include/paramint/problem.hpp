#pragma once

// Problem parameters (r, p, q, d1, d2) for parametric integration
//   (Sf)(s) = \int_{[0,1]^{d2}} f(s,t) dt,   f in W_p^r([0,1]^{d1+d2}),
// with the error measured in L_q([0,1]^{d1}).
//
// Integrability exponents are stored through their reciprocals as exact
// rationals, so p = infinity is simply 1/p = 0 and every regime boundary is an
// exact rational comparison.

#include <boost/rational.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace paramint {

using Rational = boost::rational<std::int64_t>;

inline double to_double(const Rational& x) {
  return static_cast<double>(x.numerator()) / static_cast<double>(x.denominator());
}

inline Rational positive_part(const Rational& x) { return x > Rational(0) ? x : Rational(0); }

// Comparisons below always pair two Rationals: mixed int/rational operator==
// recurses forever under C++20 rewritten-comparison rules in older Boost.

/// Maximum total dimension d1 + d2 supported by the fixed-size point buffers.
inline constexpr int kMaxDim = 6;

class InvalidProblem : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A runtime invariant (cardinality cap, ledger identity) did not hold.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// An exponent p in [1, inf], held as 1/p in [0, 1].
class Exponent {
 public:
  Exponent() = default;

  static Exponent infinity() { return Exponent(Rational(0)); }
  static Exponent from_reciprocal(Rational inv) {
    if (inv < Rational(0) || inv > Rational(1)) throw InvalidProblem("exponent must lie in [1, inf]");
    return Exponent(inv);
  }
  static Exponent from_value(Rational p) {
    if (p < Rational(1)) throw InvalidProblem("exponent must lie in [1, inf]");
    return Exponent(Rational(1) / p);
  }

  /// Accepts "inf", "infinity", integers, "a/b" and finite decimals ("2.5").
  static Exponent parse(const std::string& text) {
    if (text == "inf" || text == "infinity" || text == "Inf" || text == "\xE2\x88\x9E") {
      return infinity();
    }
    try {
      const auto slash = text.find('/');
      if (slash != std::string::npos) {
        return from_value(Rational(std::stoll(text.substr(0, slash)),
                                   std::stoll(text.substr(slash + 1))));
      }
      const auto dot = text.find('.');
      if (dot == std::string::npos) return from_value(Rational(std::stoll(text)));
      const std::string frac = text.substr(dot + 1);
      if (frac.size() > 12) throw InvalidProblem("too many decimals in exponent");
      std::int64_t scale = 1;
      for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
      const std::int64_t whole = dot == 0 ? 0 : std::stoll(text.substr(0, dot));
      const std::int64_t part = frac.empty() ? 0 : std::stoll(frac);
      return from_value(Rational(whole * scale + part, scale));
    } catch (const InvalidProblem&) {
      throw;
    } catch (const std::exception&) {
      throw InvalidProblem("cannot parse exponent '" + text + "'");
    }
  }

  const Rational& inv() const { return inv_; }
  bool is_infinite() const { return inv_ == Rational(0); }
  double value() const {
    return is_infinite() ? std::numeric_limits<double>::infinity() : 1.0 / to_double(inv_);
  }
  std::string str() const {
    if (is_infinite()) return "inf";
    const Rational p = Rational(1) / inv_;
    if (p.denominator() == 1) return std::to_string(p.numerator());
    return std::to_string(p.numerator()) + "/" + std::to_string(p.denominator());
  }

  friend bool operator==(const Exponent& a, const Exponent& b) { return a.inv_ == b.inv_; }
  // p < p'  <=>  1/p > 1/p'
  friend bool operator<(const Exponent& a, const Exponent& b) { return a.inv_ > b.inv_; }
  friend bool operator>(const Exponent& a, const Exponent& b) { return b < a; }
  friend bool operator<=(const Exponent& a, const Exponent& b) { return !(b < a); }
  friend bool operator>=(const Exponent& a, const Exponent& b) { return !(a < b); }

 private:
  explicit Exponent(Rational inv) : inv_(inv) {}
  Rational inv_{1};
};

struct ProblemSpec {
  int r = 1;
  Exponent p = Exponent::from_value(2);
  Exponent q = Exponent::from_value(2);
  int d1 = 1;
  int d2 = 1;

  int d() const { return d1 + d2; }

  /// Checks the structural invariants (dimensions, r >= 0). Solvability is a
  /// separate question answered by rates.hpp.
  void validate() const {
    if (d1 < 1 || d2 < 1) throw InvalidProblem("d1 and d2 must be positive");
    if (d1 + d2 > kMaxDim) throw InvalidProblem("d1 + d2 exceeds the supported maximum");
    if (r < 0) throw InvalidProblem("r must be non-negative");
  }

  std::string str() const {
    return "(r=" + std::to_string(r) + ",p=" + p.str() + ",q=" + q.str() +
           ",d1=" + std::to_string(d1) + ",d2=" + std::to_string(d2) + ")";
  }
};

inline ProblemSpec make_problem(int r, const std::string& p, const std::string& q, int d1, int d2) {
  ProblemSpec spec{r, Exponent::parse(p), Exponent::parse(q), d1, d2};
  spec.validate();
  return spec;
}

}  // namespace paramint
