#pragma once

// Experiment drivers behind the command-line tool: configuration, replicated
// error estimates, convergence sweeps and the adaptive/non-adaptive gap.

#include "paramint/instances.hpp"
#include "paramint/multilevel.hpp"
#include "paramint/parallel.hpp"
#include "paramint/rates.hpp"
#include "paramint/stats.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace paramint {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct InstanceConfig {
  std::string name = "smooth";  // smooth | zero | bump
  int level = 2;                // bump only
  SignLayout layout = SignLayout::dense;
  double amplitude = 1.0;
};

struct ExperimentConfig {
  ProblemSpec spec;
  Algorithm algorithm = Algorithm::a4;
  InstanceConfig instance;
  std::vector<std::int64_t> n_grid;
  int replications = 10;
  std::uint64_t seed = 1;
  std::string out;              // empty: stdout
  std::int64_t resolution = 0;  // 0: 2^{finest+2} per axis
  int threads = 1;
  double w = 2.0;
  double c1 = 1.0;
};

namespace detail {

inline Exponent parse_exponent(const nlohmann::json& v, const char* key) {
  if (v.is_string()) return Exponent::parse(v.get<std::string>());
  if (v.is_number_integer()) return Exponent::parse(std::to_string(v.get<long long>()));
  throw ConfigError(std::string("problem.") + key + " must be an integer or a string such as \"inf\" or \"3/2\"");
}

inline void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& known, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key())) throw ConfigError("unknown key '" + where + it.key() + "'");
  }
}

template <class T>
T get(const nlohmann::json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("missing or malformed '" + where + key + "'");
  }
}

}  // namespace detail

inline ProblemSpec parse_problem(const nlohmann::json& p) {
  if (!p.is_object()) throw ConfigError("'problem' must be an object");
  detail::reject_unknown(p, {"r", "p", "q", "d1", "d2"}, "problem.");
  ProblemSpec s;
  try {
    s.r = detail::get<int>(p, "r", "problem.");
    s.p = detail::parse_exponent(p.at("p"), "p");
    s.q = detail::parse_exponent(p.at("q"), "q");
    s.d1 = detail::get<int>(p, "d1", "problem.");
    s.d2 = detail::get<int>(p, "d2", "problem.");
    s.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid problem: ") + e.what());
  }
  return s;
}

inline Algorithm parse_algorithm(const std::string& a) {
  if (a == "det") return Algorithm::det;
  if (a == "a4") return Algorithm::a4;
  if (a == "a5") return Algorithm::a5;
  throw ConfigError("algorithm must be one of det, a4, a5 (got '" + a + "')");
}

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  detail::reject_unknown(j,
                         {"problem", "algorithm", "instance", "n_grid", "replications", "seed", "out", "resolution",
                          "threads", "w", "c1"},
                         "");
  ExperimentConfig c;
  if (!j.contains("problem")) throw ConfigError("missing 'problem'");
  c.spec = parse_problem(j["problem"]);
  if (j.contains("algorithm")) c.algorithm = parse_algorithm(detail::get<std::string>(j, "algorithm", ""));
  if (j.contains("instance")) {
    const auto& in = j["instance"];
    if (!in.is_object()) throw ConfigError("'instance' must be an object");
    detail::reject_unknown(in, {"name", "level", "layout", "amplitude"}, "instance.");
    c.instance.name = detail::get<std::string>(in, "name", "instance.");
    if (c.instance.name != "smooth" && c.instance.name != "zero" && c.instance.name != "bump")
      throw ConfigError("instance.name must be smooth, zero or bump");
    if (in.contains("level")) c.instance.level = detail::get<int>(in, "level", "instance.");
    if (in.contains("amplitude")) c.instance.amplitude = detail::get<double>(in, "amplitude", "instance.");
    if (in.contains("layout")) {
      const auto l = detail::get<std::string>(in, "layout", "instance.");
      if (l == "dense") c.instance.layout = SignLayout::dense;
      else if (l == "heavy_row") c.instance.layout = SignLayout::heavy_row;
      else throw ConfigError("instance.layout must be dense or heavy_row");
    }
    if (c.instance.level < 1 || c.instance.level * c.spec.d() > 40) throw ConfigError("instance.level out of range");
  }
  if (j.contains("n_grid")) c.n_grid = detail::get<std::vector<std::int64_t>>(j, "n_grid", "");
  if (j.contains("replications")) c.replications = detail::get<int>(j, "replications", "");
  if (j.contains("seed")) c.seed = detail::get<std::uint64_t>(j, "seed", "");
  if (j.contains("out")) c.out = detail::get<std::string>(j, "out", "");
  if (j.contains("resolution")) c.resolution = detail::get<std::int64_t>(j, "resolution", "");
  if (j.contains("threads")) c.threads = detail::get<int>(j, "threads", "");
  if (j.contains("w")) c.w = detail::get<double>(j, "w", "");
  if (j.contains("c1")) c.c1 = detail::get<double>(j, "c1", "");
  if (c.replications < 1) throw ConfigError("replications must be >= 1");
  if (c.threads < 1) throw ConfigError("threads must be >= 1");
  if (!(c.w >= 1.0)) throw ConfigError("w must be >= 1");
  if (!(c.c1 > 0.0)) throw ConfigError("c1 must be positive");
  if (c.resolution < 0) throw ConfigError("resolution must be >= 0");
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

/// n_grid must be strictly increasing and admissible for the algorithm.
inline void validate_grid(const ExperimentConfig& c, bool randomized) {
  if (c.n_grid.empty()) throw ConfigError("n_grid must not be empty");
  for (std::size_t i = 0; i < c.n_grid.size(); ++i) {
    if (c.n_grid[i] < 1) throw ConfigError("n_grid entries must be positive");
    if (i && c.n_grid[i] <= c.n_grid[i - 1]) throw ConfigError("n_grid must be strictly increasing");
  }
  if (randomized) {
    const std::int64_t n0 = minimal_budget(c.spec);
    if (c.n_grid.front() < n0)
      throw ConfigError("budget " + std::to_string(c.n_grid.front()) + " below minimal n(0) = " + std::to_string(n0));
  }
}

// ------------------------------------------------------------ replication

struct ErrorEstimate {
  double mean = 0.0;    // (mean e^w)^{1/w}
  double stderr_ = 0.0; // jackknife
  std::vector<double> errors;
  std::vector<std::int64_t> ledgers;
  bool under_resolved = false;
};

/// Error of R independent runs; runner(seed) returns a RunResult. Replicate k
/// uses seed derive_seed(seed, {k}).
template <class Runner>
ErrorEstimate expected_error(const Runner& runner, const ScalarField& exact, const Exponent& q, int replications,
                             std::uint64_t seed, int threads = 1, std::int64_t resolution = 0, double w = 2.0) {
  if (replications < 1) throw std::invalid_argument("replications must be >= 1");
  ErrorEstimate est;
  est.errors.assign(static_cast<std::size_t>(replications), 0.0);
  est.ledgers.assign(static_cast<std::size_t>(replications), 0);
  std::vector<char> flags(static_cast<std::size_t>(replications), 0);
  parallel_for(replications, threads, [&](std::int64_t k) {
    const RunResult res = runner(derive_seed(seed, {static_cast<std::uint64_t>(k)}));
    const std::int64_t grid = resolution > 0 ? resolution : default_resolution(res.output);
    const LqError e = lq_error(res.output, exact, q, grid);
    est.errors[static_cast<std::size_t>(k)] = e.value;
    est.ledgers[static_cast<std::size_t>(k)] = res.ledger.total;
    flags[static_cast<std::size_t>(k)] = e.under_resolved;
  });
  const RmsEstimate r = rms_jackknife(est.errors, w);
  est.mean = r.rms;
  est.stderr_ = r.stderr_rms;
  for (char f : flags) est.under_resolved = est.under_resolved || f;
  return est;
}

// ------------------------------------------------------------------- CSV

inline std::string num17(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

struct ConvergenceRow {
  std::int64_t n = 0;
  std::int64_t eval_total = 0;
  double err_mean = 0.0;
  double err_stderr = 0.0;
  double phi_theory = 0.0;
  std::uint64_t seed = 0;
  bool under_resolved = false;
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  SlopeFit fit;
};

inline TestInstance make_instance(const ExperimentConfig& c) {
  if (c.instance.name == "zero") return zero_instance(c.spec.d1, c.spec.d2);
  if (c.instance.name == "bump") {
    Rng rng = make_rng(c.seed, {2});
    const SignTensor g = random_signs(c.instance.level, c.spec.d1, c.spec.d2, c.instance.layout, c.spec.p, rng);
    return bump_instance(g, c.spec.r, c.instance.amplitude);
  }
  TestInstance t = smooth_instance(c.spec.d1, c.spec.d2);
  if (c.instance.amplitude != 1.0) {
    const double a = c.instance.amplitude;
    t.eval = [f = t.eval, a](std::span<const double> x) { return a * f(x); };
    t.exact_S = [f = t.exact_S, a](std::span<const double> s) { return a * f(s); };
  }
  return t;
}

/// Theory envelope used in the phi_theory column.
inline double theory_rate(Algorithm alg, double n, const ProblemSpec& s) {
  const Envelopes e = theory_envelopes(n, s);
  switch (alg) {
    case Algorithm::det: return e.det.value_or(std::numeric_limits<double>::quiet_NaN());
    case Algorithm::a4: return e.ran_non_lower;
    case Algorithm::a5: return e.ran_lower;
  }
  return 0.0;
}

inline ConvergenceResult run_convergence(const ExperimentConfig& c) {
  if (!solvable_check(c.spec)) throw ConfigError("problem is not solvable");
  if (c.algorithm == Algorithm::det && !embedding_check(c.spec))
    throw ConfigError("embedding condition required for the deterministic algorithm");
  if (c.algorithm == Algorithm::a5 && !adaptive_regime(c.spec))
    throw ConfigError("the adaptive algorithm requires 2 < p < q");
  validate_grid(c, c.algorithm != Algorithm::det);
  const TestInstance inst = make_instance(c);
  ConvergenceResult out;
  const RunOptions opt{c.c1, 1.0};
  for (std::size_t k = 0; k < c.n_grid.size(); ++k) {
    const std::int64_t n = c.n_grid[k];
    const std::uint64_t row_seed = derive_seed(c.seed, {3, static_cast<std::uint64_t>(k)});
    auto runner = [&](std::uint64_t sd) { return run(c.algorithm, c.spec, n, inst, sd, opt); };
    const int reps = c.algorithm == Algorithm::det ? 1 : c.replications;
    const ErrorEstimate e = expected_error(runner, inst.exact_S, c.spec.q, reps, row_seed, c.threads, c.resolution, c.w);
    ConvergenceRow row;
    row.n = n;
    row.eval_total = *std::max_element(e.ledgers.begin(), e.ledgers.end());
    row.err_mean = e.mean;
    row.err_stderr = e.stderr_;
    row.phi_theory = theory_rate(c.algorithm, static_cast<double>(n), c.spec);
    row.seed = row_seed;
    row.under_resolved = e.under_resolved;
    out.rows.push_back(row);
  }
  std::vector<double> xs, ys;
  for (const auto& r : out.rows) {
    if (r.err_mean > 0.0) {
      xs.push_back(static_cast<double>(r.n));
      ys.push_back(r.err_mean);
    }
  }
  if (xs.size() >= 2) out.fit = loglog_upper_half(xs, ys);
  return out;
}

inline void write_convergence_csv(std::ostream& os, const ConvergenceResult& r) {
  os << "n,eval_total,err_mean,err_stderr,phi_theory,seed\n";
  for (const auto& row : r.rows) {
    os << row.n << ',' << row.eval_total << ',' << num17(row.err_mean) << ',' << num17(row.err_stderr) << ','
       << num17(row.phi_theory) << ',' << row.seed << '\n';
  }
  os << "# slope " << num17(r.fit.slope) << " band " << num17(r.fit.band_lo) << ' ' << num17(r.fit.band_hi)
     << " points " << r.fit.points << '\n';
}

// ------------------------------------------------------------------- gap

struct GapRow {
  std::int64_t n = 0;
  std::int64_t eval_a4 = 0;
  std::int64_t eval_a5 = 0;
  double err_a4 = 0.0;
  double err_a5 = 0.0;
  double ratio = 0.0;
  double budget_scale = 1.0;
  int level = 0;
  std::uint64_t seed = 0;
};

struct GapResult {
  std::vector<GapRow> rows;
  SlopeFit fit;
};

/// Largest budget scale whose predicted adaptive ledger stays <= target.
inline double calibrate_budget_scale(const ProblemSpec& s, std::int64_t n, std::int64_t target, double c1) {
  auto ledger = [&](double lam) { return predicted_ledger(Algorithm::a5, s, n, RunOptions{c1, lam}); };
  double lo = 0.0, hi = 1.0;
  while (ledger(hi) <= target && hi < 1e6) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ledger(mid) <= target ? lo : hi) = mid;
  }
  return lo;
}

/// Level of the hard bump instance at budget n.
inline int gap_level(const ProblemSpec& s, std::int64_t n) {
  const Schedule sc = schedule(n, s, Algorithm::a4);
  return phi1_branch(s) == 1 ? sc.l0 : sc.l1;
}

inline GapResult run_gap(const ExperimentConfig& c) {
  if (!adaptive_regime(c.spec)) throw ConfigError("gap experiment requires 2 < p < q");
  if (!solvable_check(c.spec)) throw ConfigError("problem is not solvable");
  validate_grid(c, true);
  GapResult out;
  for (std::size_t k = 0; k < c.n_grid.size(); ++k) {
    const std::int64_t n = c.n_grid[k];
    GapRow row;
    row.n = n;
    row.seed = derive_seed(c.seed, {4, static_cast<std::uint64_t>(k)});
    row.level = gap_level(c.spec, n);
    const std::int64_t target = predicted_ledger(Algorithm::a4, c.spec, n, RunOptions{c.c1, 1.0});
    row.budget_scale = calibrate_budget_scale(c.spec, n, target, c.c1);
    const RunOptions opt5{c.c1, row.budget_scale};
    if (row.budget_scale <= 0.0) throw InvariantViolation("no adaptive budget fits the non-adaptive ledger");

    std::vector<double> e4(static_cast<std::size_t>(c.replications)), e5(e4.size());
    std::vector<std::int64_t> l4(e4.size()), l5(e4.size());
    parallel_for(c.replications, c.threads, [&](std::int64_t rep) {
      const auto r = static_cast<std::uint64_t>(rep);
      Rng rng = make_rng(row.seed, {r, 0});
      const SignTensor g = random_signs(row.level, c.spec.d1, c.spec.d2, SignLayout::heavy_row, c.spec.p, rng);
      const TestInstance inst = bump_instance(g, c.spec.r, c.instance.amplitude);
      const RunResult a = run_a4(c.spec, n, inst, derive_seed(row.seed, {r, 1}), RunOptions{c.c1, 1.0});
      const RunResult b = run_a5(c.spec, n, inst, derive_seed(row.seed, {r, 2}), opt5);
      const std::int64_t grid =
          c.resolution > 0 ? c.resolution
                           : std::max({default_resolution(a.output), default_resolution(b.output), std::int64_t{4} << row.level});
      const auto i = static_cast<std::size_t>(rep);
      e4[i] = lq_error(a.output, inst.exact_S, c.spec.q, grid).value;
      e5[i] = lq_error(b.output, inst.exact_S, c.spec.q, grid).value;
      l4[i] = a.ledger.total;
      l5[i] = b.ledger.total;
    });
    row.err_a4 = rms_jackknife(e4, c.w).rms;
    row.err_a5 = rms_jackknife(e5, c.w).rms;
    row.eval_a4 = *std::max_element(l4.begin(), l4.end());
    row.eval_a5 = *std::max_element(l5.begin(), l5.end());
    row.ratio = row.err_a5 > 0.0 ? row.err_a4 / row.err_a5 : std::numeric_limits<double>::infinity();
    if (row.eval_a5 > row.eval_a4 ||
        std::abs(static_cast<double>(row.eval_a4 - row.eval_a5)) > 0.1 * static_cast<double>(row.eval_a4)) {
      throw InvariantViolation("ledger parity violated at n = " + std::to_string(n) + ": " +
                               std::to_string(row.eval_a4) + " vs " + std::to_string(row.eval_a5));
    }
    out.rows.push_back(row);
  }
  std::vector<double> xs, ys;
  for (const auto& r : out.rows) {
    if (std::isfinite(r.ratio) && r.ratio > 0.0) {
      xs.push_back(static_cast<double>(r.n));
      ys.push_back(r.ratio);
    }
  }
  if (xs.size() >= 2) out.fit = loglog_upper_half(xs, ys);
  return out;
}

inline void write_gap_csv(std::ostream& os, const GapResult& r) {
  os << "n,eval_a4,eval_a5,err_a4,err_a5,ratio,seed\n";
  for (const auto& row : r.rows) {
    os << row.n << ',' << row.eval_a4 << ',' << row.eval_a5 << ',' << num17(row.err_a4) << ',' << num17(row.err_a5)
       << ',' << num17(row.ratio) << ',' << row.seed << '\n';
  }
  os << "# slope " << num17(r.fit.slope) << " band " << num17(r.fit.band_lo) << ' ' << num17(r.fit.band_hi)
     << " points " << r.fit.points << '\n';
}

// ----------------------------------------------------------------- rates

inline nlohmann::json rational_json(const Rational& q) {
  std::string s = std::to_string(q.numerator());
  if (q.denominator() != 1) s += "/" + std::to_string(q.denominator());
  return {{"exact", s}, {"value", to_double(q)}};
}

inline nlohmann::json rate_json(const RateExponent& e) {
  return {{"n_exponent", rational_json(e.n_exp)}, {"log_exponent", rational_json(e.log_exp)}};
}

inline nlohmann::json rates_report(const ProblemSpec& s) {
  s.validate();
  if (!solvable_check(s)) throw ConfigError("problem is not solvable: " + s.str());
  const RegimeReport r = regime_report(s);
  nlohmann::json j;
  j["problem"] = {{"r", s.r}, {"p", s.p.str()}, {"q", s.q.str()}, {"d1", s.d1}, {"d2", s.d2}};
  j["p_bar"] = r.p_bar_inv == Rational(1, 2) ? "2" : s.p.str();
  j["sigma1"] = r.sigma1;
  j["beta1"] = r.beta1;
  j["beta2"] = r.beta2;
  j["sigma2"] = r.sigma2;
  j["embedded"] = r.embedded;
  j["solvable"] = r.solvable;
  j["compact"] = r.compact;
  j["adaptive_regime"] = r.adaptive;
  j["phi1_branch"] = "Phi1 case " + std::to_string(r.phi1_branch);
  j["phi1"] = rate_json(r.phi1);
  j["phi2_branch"] = r.phi2_branch ? nlohmann::json(r.phi2_branch->str()) : nlohmann::json(nullptr);
  j["phi2"] = r.phi2 ? rate_json(*r.phi2) : nlohmann::json(nullptr);
  if (r.theta) {
    j["theta"] = to_double(*r.theta);
    j["theta_exact"] = rational_json(*r.theta)["exact"];
  } else {
    j["theta"] = nullptr;
    j["theta_exact"] = nullptr;
  }
  j["det_exponent"] = r.det ? rational_json(*r.det) : nlohmann::json(nullptr);
  if (s.r >= 1) {
    j["n0"] = minimal_budget(s);
    j["damping"] = {{"a4", rational_json(damping_policy(s, Algorithm::a4))},
                    {"a5", r.adaptive ? rational_json(damping_policy(s, Algorithm::a5)) : nlohmann::json(nullptr)}};
  }
  return j;
}

}  // namespace paramint
