#pragma once

// Multilevel algorithms for parametric integration
//
//   A(f) = S P_{l0,rho} f + sum_{l0 <= l < l1} V_l A_l(U_{l,rho} f)
//
// where S P_{l0,rho} is integrated exactly, U_{l,rho} f is the deferred
// (kappa' 2^{d1 l}) x 2^{d2 l} tensor of detail coefficients, A_l is a
// discrete mean estimator with budget n_l, and V_l maps row means back to a
// piecewise polynomial on the parameter domain D1.

#include "paramint/discrete_mean.hpp"
#include "paramint/interpolation.hpp"
#include "paramint/partition.hpp"
#include "paramint/rates.hpp"
#include "paramint/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace paramint {

enum class Algorithm { det, a4, a5 };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::det: return "det";
    case Algorithm::a4: return "a4";
    case Algorithm::a5: return "a5";
  }
  return "?";
}

class BudgetTooSmall : public std::invalid_argument {
 public:
  BudgetTooSmall(std::int64_t n, std::int64_t n0)
      : std::invalid_argument("budget " + std::to_string(n) + " below minimal n(0) = " + std::to_string(n0)),
        minimal(n0) {}
  std::int64_t minimal;
};

// ---------------------------------------------------------------- schedule

namespace detail {

/// Smallest k >= 0 with 2^{k*step} >= n.
inline int ceil_log2_steps(std::int64_t n, int step) {
  int k = 0;
  while (k * step < 62 && (std::int64_t{1} << (k * step)) < n) ++k;
  return k;
}

/// Piecewise-linear level profile g(x) = slope x + intercept on x in [1, lambda]
/// (levels in units of l0), damped by weight * delta * min(x - 1, lambda - x).
struct LevelProfile {
  Rational slope;
  Rational intercept;
  Rational weight;
  Rational at(const Rational& x) const { return slope * x + intercept; }
};

/// Half of the largest damping that keeps every dominant profile strictly
/// monotone toward its dominant endpoint and every other profile below
/// T - delta, where T is the largest endpoint value. Zero if a dominant
/// profile is flat.
inline Rational damping_from_profiles(const std::vector<LevelProfile>& gs, const Rational& lambda) {
  const Rational one(1);
  Rational top = gs.front().at(one);
  for (const auto& g : gs) top = std::max({top, g.at(one), g.at(lambda)});
  const Rational mid = (one + lambda) / Rational(2);
  bool bounded = false;
  Rational best(0);
  auto take = [&](const Rational& b) {
    best = bounded ? std::min(best, b) : b;
    bounded = true;
  };
  for (const auto& g : gs) {
    const Rational w = g.weight > Rational(0) ? g.weight : Rational(1);
    if (std::max(g.at(one), g.at(lambda)) == top) {
      if (g.slope == Rational(0)) return Rational(0);
      take((g.slope > Rational(0) ? g.slope : -g.slope) / w);
    } else {
      take(top - g.at(one));
      take(top - g.at(lambda));
      take((top - g.at(mid)) / (one + w * (lambda - one) / Rational(2)));
    }
  }
  if (!bounded || best <= Rational(0)) return Rational(0);
  return best / Rational(2);
}

}  // namespace detail

/// Damping delta of the level budgets for the given algorithm.
inline Rational damping_policy(const ProblemSpec& s, Algorithm alg) {
  const Rational lambda(s.d(), s.d1);
  const Rational one(1);
  if (alg == Algorithm::a4) {
    const Rational w = one - p_bar_inv(s);
    const Rational slope =
        Rational(-s.r) + (positive_part(s.p.inv() - s.q.inv()) + w) * Rational(s.d1);
    return detail::damping_from_profiles({{slope, -w * Rational(s.d()), w}}, lambda);
  }
  if (alg == Algorithm::a5) {
    const Rational w1 = one - s.p.inv();
    const Rational half(1, 2);
    const detail::LevelProfile g1{Rational(-s.r) + (one - s.q.inv()) * Rational(s.d1), -w1 * Rational(s.d()), w1};
    const detail::LevelProfile g2{Rational(-s.r) + half * Rational(s.d1), -half * Rational(s.d()), half};
    return detail::damping_from_profiles({g1, g2}, lambda);
  }
  return Rational(0);
}

struct Schedule {
  std::int64_t n = 0;
  int l0 = 0;
  int l1 = 0;
  Rational damping{0};
  int sigma1 = 0;
  std::vector<std::int64_t> n_l;  // budgets for l0 <= l < l1

  std::int64_t budget(int l) const { return n_l.at(static_cast<std::size_t>(l - l0)); }
};

inline int schedule_l0(std::int64_t n, const ProblemSpec& s) {
  return s.d1 * detail::ceil_log2_steps(n, s.d1 * s.d());
}

inline int schedule_l1(int l0, const ProblemSpec& s) {
  const int sg = sigma1(s);
  if (sg == 0 || l0 <= 1) return (s.d() * l0 + s.d1 - 1) / s.d1;
  const double x = (s.d() * l0 - std::log2(static_cast<double>(l0))) / s.d1;
  return static_cast<int>(std::ceil(x - 1e-12));
}

/// Least n >= 2 with 2 <= l0(n) < l1(n).
inline std::int64_t minimal_budget(const ProblemSpec& s) {
  for (std::int64_t n = 2;; ++n) {
    const int l0 = schedule_l0(n, s);
    if (l0 >= 2 && schedule_l1(l0, s) > l0) return n;
    if (n > (std::int64_t{1} << 40)) throw InvalidProblem("no admissible budget found");
  }
}

inline Schedule make_schedule(std::int64_t n, const ProblemSpec& s, const Rational& damping) {
  const std::int64_t n0 = minimal_budget(s);
  if (n < n0) throw BudgetTooSmall(n, n0);
  Schedule sc;
  sc.n = n;
  sc.l0 = schedule_l0(n, s);
  sc.l1 = schedule_l1(sc.l0, s);
  sc.damping = damping;
  sc.sigma1 = sigma1(s);
  if (s.d() * sc.l0 > 62) throw InvalidProblem("budget too large for the index type");
  for (int l = sc.l0; l < sc.l1; ++l) {
    const Rational e = Rational(s.d() * sc.l0) - damping * Rational(std::min(l - sc.l0, sc.l1 - l));
    if (e.denominator() == 1) {
      sc.n_l.push_back(std::int64_t{1} << e.numerator());
    } else {
      sc.n_l.push_back(static_cast<std::int64_t>(std::ceil(std::exp2(to_double(e)))));
    }
  }
  return sc;
}

inline Schedule schedule(std::int64_t n, const ProblemSpec& s, Algorithm alg) {
  return make_schedule(n, s, damping_policy(s, alg));
}

/// Level of the deterministic single-level algorithm, ceil(log2 n / (d1+d2)).
inline int deterministic_level(std::int64_t n, const ProblemSpec& s) { return detail::ceil_log2_steps(n, s.d()); }

/// Repetition count of the adaptive estimator at level l.
inline int repetitions(int level, const ProblemSpec& s, double c1, int kappa1) {
  const double rows = static_cast<double>(kappa1) * std::ldexp(1.0, s.d1 * level);
  const double cols = std::ldexp(1.0, s.d2 * level);
  return std::max(1, static_cast<int>(std::ceil(c1 * std::log2(rows + cols))));
}

// ------------------------------------------------------------ U, theta, V

/// Deferred tensor U_{l,rho} f with rows (i1, j) -> i1 kappa' + j and columns i2.
/// Each entry evaluates f at the merged frame points of its cell.
template <class F>
class UTensor {
 public:
  UTensor(const DetailFrame& frame, int level, int d1, int d2, const F& f)
      : frame_(&frame), level_(level), d1_(d1), d2_(d2), f_(&f) {
    if (frame.dim() != d1 + d2) throw std::invalid_argument("frame dimension mismatch");
  }

  std::int64_t rows() const { return frame_->kappa1 * cell_count(level_, d1_); }
  std::int64_t cols() const { return cell_count(level_, d2_); }
  std::int64_t f_calls() const { return calls_; }

  double operator()(std::int64_t row, std::int64_t i2) const {
    const std::int64_t i1 = row / frame_->kappa1;
    const int j = static_cast<int>(row % frame_->kappa1);
    const int d = d1_ + d2_;
    double anchor[kMaxDim], x[kMaxDim];
    detail::anchor(level_, i1, d1_, {anchor, static_cast<std::size_t>(d1_)});
    detail::anchor(level_, i2, d2_, {anchor + d1_, static_cast<std::size_t>(d2_)});
    const auto& e = frame_->entries[static_cast<std::size_t>(j)];
    double s = 0.0;
    for (std::size_t m = 0; m < e.weights.size(); ++m) {
      for (int a = 0; a < d; ++a) x[a] = anchor[a] + std::ldexp(e.points[m * d + a], -level_);
      s += e.weights[m] * (*f_)(std::span<const double>(x, static_cast<std::size_t>(d)));
    }
    calls_ += static_cast<std::int64_t>(e.weights.size());
    return s;
  }

 private:
  const DetailFrame* frame_;
  int level_, d1_, d2_;
  const F* f_;
  mutable std::int64_t calls_ = 0;
};

/// theta_j = S psi_j on D1, for j < kappa' = 2^d kappa:
///   theta_j(s) = chi_{D1_{1,i0_1}}(s) 2^{-d2} W(j0_t) phi^{(s)}_{j0_s}(2 s - 2 s_{1,i0_1}),
/// with i0 = 2^{d2} i0_1 + i0_2, j0 = r^{d2} j0_s + j0_t and W(j0_t) the
/// integral of the t-basis function.
struct ThetaSet {
  LagrangeBasis full, basis_s, basis_t;
  int d1 = 1, d2 = 1;
  std::vector<double> wt;

  int kappa1() const { return (1 << (d1 + d2)) * full.kappa(); }

  struct Index {
    int i0_1, i0_2, j0_s, j0_t;
  };
  Index split(int j) const {
    const int i0 = j / full.kappa(), j0 = j % full.kappa();
    return {i0 >> d2, i0 & ((1 << d2) - 1), j0 / basis_t.kappa(), j0 % basis_t.kappa()};
  }

  double operator()(int j, std::span<const double> s) const {
    const Index ix = split(j);
    double v[kMaxDim];
    if (detail::to_local(1, s, {v, s.size()}) != ix.i0_1) return 0.0;
    return std::ldexp(wt[static_cast<std::size_t>(ix.j0_t)], -d2) * basis_s.phi(ix.j0_s, {v, s.size()});
  }
};

inline ThetaSet s_theta(const LagrangeBasis& full, int d1, int d2) {
  if (full.dim() != d1 + d2) throw std::invalid_argument("basis dimension mismatch");
  ThetaSet th{full, LagrangeBasis(full.r(), d1, full.margin()), LagrangeBasis(full.r(), d2, full.margin()), d1, d2, {}};
  th.wt.resize(static_cast<std::size_t>(th.basis_t.kappa()));
  for (int k = 0; k < th.basis_t.kappa(); ++k) th.wt[static_cast<std::size_t>(k)] = th.basis_t.weight(k);
  return th;
}

namespace detail {

/// Index of the level-(l+1) child of level-l cell `parent` selected by the
/// level-1 cell `child` of the unit cube.
inline std::int64_t child_cell(int level, std::int64_t parent, std::int64_t child, int dim) {
  std::int64_t pk[kMaxDim], ck[kMaxDim];
  axis_indices(level, parent, dim, {pk, static_cast<std::size_t>(dim)});
  axis_indices(1, child, dim, {ck, static_cast<std::size_t>(dim)});
  std::int64_t index = 0;
  for (int a = 0; a < dim; ++a) index = (index << (level + 1)) + 2 * pk[a] + ck[a];
  return index;
}

}  // namespace detail

/// V_l g = sum_{i1, j} g(i1, j) R_{l i1} theta_j, returned as a piecewise
/// polynomial on the level-(l+1) cells of D1.
inline PiecewisePolynomial v_operator(std::span<const double> g, int level, const ThetaSet& th) {
  const std::int64_t cells = cell_count(level, th.d1);
  const int k1 = th.kappa1();
  if (static_cast<std::int64_t>(g.size()) != cells * k1) throw std::invalid_argument("v_operator: length mismatch");
  const int ks = th.basis_s.kappa();
  PiecewisePolynomial out{th.basis_s, level + 1, {}, {}};
  out.coeffs.assign(static_cast<std::size_t>(cell_count(level + 1, th.d1) * ks), 0.0);
  const double scale = std::ldexp(1.0, -th.d2);
  for (std::int64_t i1 = 0; i1 < cells; ++i1) {
    for (int j = 0; j < k1; ++j) {
      const double v = g[static_cast<std::size_t>(i1 * k1 + j)];
      if (v == 0.0) continue;
      const auto ix = th.split(j);
      const std::int64_t c = detail::child_cell(level, i1, ix.i0_1, th.d1);
      out.coeffs[static_cast<std::size_t>(c * ks + ix.j0_s)] += scale * th.wt[static_cast<std::size_t>(ix.j0_t)] * v;
    }
  }
  return out;
}

/// Exact S P_{l0,rho} f as a piecewise polynomial on the level-l0 cells of D1.
/// `evals` receives the number of f evaluations, kappa 2^{(d1+d2) l0}.
template <class F>
PiecewisePolynomial base_term(const LagrangeBasis& basis, int d1, int d2, int level, const Point& rho, const F& f,
                              std::int64_t* evals = nullptr) {
  const ThetaSet th = s_theta(basis, d1, d2);
  const int kappa = basis.kappa(), ks = th.basis_s.kappa(), kt = th.basis_t.kappa();
  const int d = d1 + d2;
  const std::vector<double> a = shift_matrix(basis, rho);
  const std::vector<Point> local = shifted_nodes(basis, rho);
  // M[j_s][k] = sum_{j_t} a_{(j_s,j_t),k} W(j_t)
  std::vector<double> mat(static_cast<std::size_t>(ks * kappa), 0.0);
  for (int js = 0; js < ks; ++js)
    for (int jt = 0; jt < kt; ++jt)
      for (int k = 0; k < kappa; ++k)
        mat[static_cast<std::size_t>(js * kappa + k)] +=
            a[static_cast<std::size_t>((js * kt + jt) * kappa + k)] * th.wt[static_cast<std::size_t>(jt)];

  PiecewisePolynomial out{th.basis_s, level, {}, {}};
  const std::int64_t c1 = cell_count(level, d1), c2 = cell_count(level, d2);
  out.coeffs.assign(static_cast<std::size_t>(c1 * ks), 0.0);
  const double scale = std::ldexp(1.0, -d2 * level);
  std::vector<double> vals(kappa);
  double anchor[kMaxDim], x[kMaxDim];
  for (std::int64_t i1 = 0; i1 < c1; ++i1) {
    detail::anchor(level, i1, d1, {anchor, static_cast<std::size_t>(d1)});
    double* b = out.coeffs.data() + i1 * ks;
    for (std::int64_t i2 = 0; i2 < c2; ++i2) {
      detail::anchor(level, i2, d2, {anchor + d1, static_cast<std::size_t>(d2)});
      for (int k = 0; k < kappa; ++k) {
        for (int c = 0; c < d; ++c) x[c] = anchor[c] + std::ldexp(local[static_cast<std::size_t>(k)][c], -level);
        vals[static_cast<std::size_t>(k)] = f(std::span<const double>(x, static_cast<std::size_t>(d)));
      }
      for (int js = 0; js < ks; ++js) {
        double s = 0.0;
        for (int k = 0; k < kappa; ++k) s += mat[static_cast<std::size_t>(js * kappa + k)] * vals[static_cast<std::size_t>(k)];
        b[js] += scale * s;
      }
    }
  }
  if (evals) *evals = c1 * c2 * kappa;
  return out;
}

// ------------------------------------------------------------------ output

/// Sum of piecewise polynomials on D1: the base term first, then one part
/// per detail level.
struct MultilevelOutput {
  int d1 = 1;
  std::vector<PiecewisePolynomial> parts;

  double operator()(std::span<const double> s) const {
    double v = 0.0;
    for (const auto& p : parts) v += p(s);
    return v;
  }
  double operator()(const Point& s) const { return (*this)(s.view()); }

  /// a * this + other
  MultilevelOutput axpy(double a, const MultilevelOutput& other) const {
    MultilevelOutput out{d1, parts};
    for (auto& p : out.parts)
      for (double& c : p.coeffs) c *= a;
    out.parts.insert(out.parts.end(), other.parts.begin(), other.parts.end());
    return out;
  }

  /// Finest cell level used by any part.
  int finest_level() const {
    int l = 0;
    for (const auto& p : parts) l = std::max(l, p.level);
    return l;
  }
};

struct CardinalityLedger {
  std::int64_t base_evals = 0;
  std::vector<std::int64_t> level_evals;    // f evaluations per level
  std::vector<std::int64_t> level_queries;  // discrete queries card(A_l)
  std::int64_t total = 0;
  std::int64_t bound = 0;  // kappa 2^{(d1+d2) l0} + kappa'' sum card(A_l)

  void close(int kappa2, std::int64_t base_bound) {
    total = base_evals;
    std::int64_t q = 0;
    for (auto e : level_evals) total += e;
    for (auto e : level_queries) q += e;
    bound = base_bound + kappa2 * q;
    if (total > bound) {
      throw InvariantViolation("cardinality " + std::to_string(total) + " exceeds the composite bound " +
                               std::to_string(bound));
    }
  }
};

struct RunOptions {
  double c1 = 1.0;            // m_l = ceil(c1 log2(N1 + N2))
  double budget_scale = 1.0;  // level budgets ceil(scale * n_l)
};

struct RunResult {
  MultilevelOutput output;
  CardinalityLedger ledger;
  Schedule schedule;
  Point rho;
};

namespace detail {

inline std::int64_t scaled_budget(std::int64_t n_l, double scale) {
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(scale * static_cast<double>(n_l))));
}

template <class F>
RunResult run_multilevel(const ProblemSpec& s, std::int64_t n, const F& f, std::uint64_t seed, Algorithm alg,
                         const RunOptions& opt) {
  s.validate();
  if (s.r < 1) throw InvalidProblem("algorithms require r >= 1");
  if (!solvable_check(s)) throw InvalidProblem("problem is not solvable");
  if (alg == Algorithm::a5 && !adaptive_regime(s)) throw InvalidProblem("the adaptive algorithm requires 2 < p < q");
  RunResult res;
  res.schedule = schedule(n, s, alg);
  const Schedule& sc = res.schedule;
  Rng shift_rng = make_rng(seed, {0});
  res.rho = draw_shift(ShiftMode::uniform, s.d(), shift_rng);

  const LagrangeBasis basis(s.r, s.d());
  const DetailFrame frame = detail_frame(basis, res.rho);
  const ThetaSet th = s_theta(basis, s.d1, s.d2);
  res.output.d1 = s.d1;
  res.output.parts.push_back(base_term(basis, s.d1, s.d2, sc.l0, res.rho, f, &res.ledger.base_evals));

  for (int l = sc.l0; l < sc.l1; ++l) {
    Rng rng = make_rng(seed, {1, static_cast<std::uint64_t>(l)});
    const UTensor<F> u(frame, l, s.d1, s.d2, f);
    const std::int64_t budget = scaled_budget(sc.budget(l), opt.budget_scale);
    MeanEstimate est;
    if (budget >= u.rows() * u.cols()) {
      est = exact_mean(u);
    } else if (alg == Algorithm::a4) {
      est = mc_mean_nonadaptive(u, budget, rng);
    } else {
      est = mc_mean_adaptive(u, budget, repetitions(l, s, opt.c1, frame.kappa1), s.p, rng);
    }
    res.ledger.level_queries.push_back(est.eval_count);
    res.ledger.level_evals.push_back(u.f_calls());
    res.output.parts.push_back(v_operator(est.row_means, l, th));
  }
  res.ledger.close(frame.kappa2, basis.kappa() * cell_count(sc.l0, s.d()));
  return res;
}

}  // namespace detail

/// Non-adaptive multilevel algorithm.
template <class F>
RunResult run_a4(const ProblemSpec& s, std::int64_t n, const F& f, std::uint64_t seed, const RunOptions& opt = {}) {
  return detail::run_multilevel(s, n, f, seed, Algorithm::a4, opt);
}

/// Adaptive multilevel algorithm (2 < p < q).
template <class F>
RunResult run_a5(const ProblemSpec& s, std::int64_t n, const F& f, std::uint64_t seed, const RunOptions& opt = {}) {
  return detail::run_multilevel(s, n, f, seed, Algorithm::a5, opt);
}

/// Deterministic single-level algorithm S P_{l0,0} with l0 = ceil(log2 n/(d1+d2)).
template <class F>
RunResult run_deterministic(const ProblemSpec& s, std::int64_t n, const F& f) {
  s.validate();
  if (s.r < 1) throw InvalidProblem("algorithms require r >= 1");
  if (!embedding_check(s)) throw InvalidProblem("embedding condition required for the deterministic algorithm");
  if (n < 1) throw std::invalid_argument("budget must be positive");
  RunResult res;
  res.schedule.n = n;
  res.schedule.l0 = res.schedule.l1 = deterministic_level(n, s);
  res.rho = Point(s.d());
  const LagrangeBasis basis(s.r, s.d());
  res.output.d1 = s.d1;
  res.output.parts.push_back(base_term(basis, s.d1, s.d2, res.schedule.l0, res.rho, f, &res.ledger.base_evals));
  res.ledger.close(2 * basis.kappa(), basis.kappa() * cell_count(res.schedule.l0, s.d()));
  return res;
}

template <class F>
RunResult run(Algorithm alg, const ProblemSpec& s, std::int64_t n, const F& f, std::uint64_t seed,
              const RunOptions& opt = {}) {
  switch (alg) {
    case Algorithm::det: return run_deterministic(s, n, f);
    case Algorithm::a4: return run_a4(s, n, f, seed, opt);
    case Algorithm::a5: return run_a5(s, n, f, seed, opt);
  }
  throw std::invalid_argument("unknown algorithm");
}

/// Closed-form upper bound of the ledger total (exact unless coincident frame
/// nodes or all-zero adaptive moments reduce the count).
inline std::int64_t predicted_ledger(Algorithm alg, const ProblemSpec& s, std::int64_t n, const RunOptions& opt = {}) {
  const LagrangeBasis basis(s.r, s.d());
  const int kappa = basis.kappa();
  if (alg == Algorithm::det) return kappa * cell_count(deterministic_level(n, s), s.d());
  const Schedule sc = schedule(n, s, alg);
  const std::int64_t k1 = (std::int64_t{1} << s.d()) * kappa, k2 = 2 * kappa;
  std::int64_t total = kappa * cell_count(sc.l0, s.d());
  for (int l = sc.l0; l < sc.l1; ++l) {
    const std::int64_t rows = k1 * cell_count(l, s.d1), cols = cell_count(l, s.d2);
    const std::int64_t b = detail::scaled_budget(sc.budget(l), opt.budget_scale);
    std::int64_t q = 0;
    if (b >= rows * cols) {
      q = rows * cols;
    } else if (alg == Algorithm::a4) {
      q = b >= rows ? rows * ((b + rows - 1) / rows) : b;
    } else {
      const std::int64_t per = b >= rows ? 2 * rows * ((b + rows - 1) / rows) + b : 3 * b;
      q = per * repetitions(l, s, opt.c1, static_cast<int>(k1));
    }
    total += q * k2;
  }
  return total;
}

}  // namespace paramint
