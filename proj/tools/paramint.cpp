// paramint: regime reports, convergence sweeps, the adaptive/non-adaptive gap
// experiment and the self-test suite.
//
// exit codes: 0 ok, 1 invariant failure, 2 invalid configuration

#include "paramint/checks.hpp"
#include "paramint/experiment.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

using namespace paramint;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
  std::string problem;  // rates only: "r,p,q,d1,d2"
};

ExperimentConfig load(const Flags& f) {
  if (f.config.empty()) throw ConfigError("--config is required");
  ExperimentConfig c = load_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (!f.out.empty()) c.out = f.out;
  if (f.threads) {
    if (*f.threads < 1) throw ConfigError("--threads must be >= 1");
    c.threads = *f.threads;
  }
  return c;
}

template <class Write>
void emit(const std::string& path, Write&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open output '" + path + "'");
  write(os);
  if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

ProblemSpec parse_problem_flag(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) parts.push_back(item);
  if (parts.size() != 5) throw ConfigError("--problem expects r,p,q,d1,d2");
  try {
    ProblemSpec s = make_problem(std::stoi(parts[0]), parts[1], parts[2], std::stoi(parts[3]), std::stoi(parts[4]));
    s.validate();
    return s;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid --problem: ") + e.what());
  }
}

int cmd_rates(const Flags& f) {
  ProblemSpec s;
  if (!f.problem.empty()) {
    s = parse_problem_flag(f.problem);
  } else {
    if (f.config.empty()) throw ConfigError("rates needs --config or --problem");
    std::ifstream in(f.config);
    if (!in) throw ConfigError("cannot open config '" + f.config + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    s = parse_config(j).spec;
  }
  const nlohmann::json report = rates_report(s);
  emit(f.out, [&](std::ostream& os) { os << report.dump(2) << '\n'; });
  return 0;
}

int cmd_convergence(const Flags& f) {
  const ExperimentConfig c = load(f);
  if (c.algorithm != Algorithm::det) std::cerr << "n(0) = " << minimal_budget(c.spec) << '\n';
  const auto t0 = std::chrono::steady_clock::now();
  const ConvergenceResult r = run_convergence(c);
  for (const auto& row : r.rows)
    if (row.under_resolved) std::cerr << "warning: error grid may be under-resolved at n = " << row.n << '\n';
  emit(c.out, [&](std::ostream& os) { write_convergence_csv(os, r); });
  std::cerr << "wall time " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
  return 0;
}

int cmd_gap(const Flags& f) {
  const ExperimentConfig c = load(f);
  std::cerr << "n(0) = " << minimal_budget(c.spec) << '\n';
  const auto t0 = std::chrono::steady_clock::now();
  const GapResult r = run_gap(c);
  emit(c.out, [&](std::ostream& os) { write_gap_csv(os, r); });
  std::cerr << "wall time " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
  return 0;
}

int cmd_selftest(const Flags& f) {
  const std::uint64_t seed = f.seed.value_or(1);
  using namespace paramint::checks;
  const std::vector<std::function<CheckResult()>> suite{
      [&] { return interpolation_reproduction(seed); },
      [&] { return telescoping(seed); },
      [&] { return telescoping_mutation(seed); },
      [&] { return decomposition(seed); },
      [&] { return exact_mean_oracle(seed); },
      [&] { return unbiasedness(seed); },
      [&] { return cardinality_caps(seed); },
      [&] { return rates_arithmetic(seed); },
      [&] { return exactness(seed); },
  };
  int failed = 0;
  std::ostringstream report;
  for (const auto& check : suite) {
    CheckResult r;
    try {
      r = check();
    } catch (const std::exception& e) {
      r = {"(exception)", false, e.what()};
    }
    failed += !r.ok;
    report << (r.ok ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
  }
  report << (failed ? std::to_string(failed) + " check(s) failed" : std::string("all checks passed")) << '\n';
  emit(f.out, [&](std::ostream& os) { os << report.str(); });
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomized multilevel algorithms for parametric integration"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags flags;
  app.add_option("--config", flags.config, "JSON configuration file");
  app.add_option("--seed", flags.seed, "master seed (overrides the config)");
  app.add_option("--out", flags.out, "output path (default: stdout)");
  app.add_option("--threads", flags.threads, "worker threads (overrides the config)");

  auto* rates = app.add_subcommand("rates", "regime flags and rate exponents as JSON");
  rates->add_option("--problem", flags.problem, "r,p,q,d1,d2 instead of a config file");
  app.add_subcommand("convergence", "error-versus-budget sweep as CSV");
  app.add_subcommand("gap", "adaptive versus non-adaptive error ratio as CSV");
  app.add_subcommand("selftest", "invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "rates") return cmd_rates(flags);
    if (name == "convergence") return cmd_convergence(flags);
    if (name == "gap") return cmd_gap(flags);
    return cmd_selftest(flags);
  } catch (const ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return 2;
  } catch (const BudgetTooSmall& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return 2;
  } catch (const InvalidProblem& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return 2;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant failure: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
