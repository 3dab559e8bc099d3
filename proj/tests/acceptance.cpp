// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// The sweeps write their CSVs into the working directory.

#include "paramint/checks.hpp"
#include "paramint/experiment.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#ifndef PARAMINT_CONFIG_DIR
#define PARAMINT_CONFIG_DIR "configs"
#endif

using namespace paramint;
using checks::CheckResult;

namespace {

constexpr std::uint64_t kSeed = 1;

ExperimentConfig config(const std::string& name) { return load_config(std::string(PARAMINT_CONFIG_DIR) + "/" + name); }

std::string band(const SlopeFit& f) {
  return "slope " + num17(f.slope) + " band [" + num17(f.band_lo) + ", " + num17(f.band_hi) + "] over " +
         std::to_string(f.points) + " points";
}

CheckResult all_of(std::string name, std::vector<CheckResult> parts) {
  CheckResult r{std::move(name), true, ""};
  for (const auto& p : parts) {
    r.ok = r.ok && p.ok;
    if (!r.detail.empty()) r.detail += "; ";
    r.detail += p.name + ": " + p.detail;
  }
  return r;
}

CheckResult convergence(const std::string& file, double lo, double hi) {
  const ExperimentConfig c = config(file);
  const ConvergenceResult r = run_convergence(c);
  std::ofstream os("acceptance_" + file.substr(0, file.find('.')) + ".csv");
  write_convergence_csv(os, r);
  int flagged = 0;
  for (const auto& row : r.rows) flagged += row.under_resolved;
  const bool ok = r.fit.slope >= lo && r.fit.slope <= hi;
  return {file, ok,
          band(r.fit) + ", target [" + num17(lo) + ", " + num17(hi) + "], under-resolved rows " +
              std::to_string(flagged)};
}

CheckResult gap(const std::string& file, double lo, double hi) {
  const ExperimentConfig c = config(file);
  const GapResult r = run_gap(c);
  std::ofstream os("acceptance_" + file.substr(0, file.find('.')) + ".csv");
  write_gap_csv(os, r);
  const bool ok = r.fit.slope >= lo && r.fit.slope <= hi;
  return {file, ok, band(r.fit) + ", target [" + num17(lo) + ", " + num17(hi) + "]"};
}

}  // namespace

int main() {
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<std::pair<int, std::function<CheckResult()>>> criteria{
      {1, [] { return checks::interpolation_reproduction(kSeed); }},
      {2, [] { return checks::telescoping(kSeed); }},
      {3, [] { return checks::decomposition(kSeed); }},
      {4, [] { return checks::exact_mean_oracle(kSeed); }},
      {5, [] { return checks::unbiasedness(kSeed); }},
      {6, [] { return checks::cardinality_caps(kSeed); }},
      {7, [] { return convergence("convergence_a4.json", -0.90, -0.60); }},
      {8, [] { return convergence("convergence_det.json", -1.15, -0.85); }},
      {9,
       [inf] {
         return all_of("gap", {gap("gap_max.json", 0.05, inf), gap("gap_theta0.json", -0.05, 0.05)});
       }},
      {10, [] { return checks::rates_arithmetic(kSeed); }},
      {11, [] { return checks::exactness(kSeed); }},
  };

  int failed = 0;
  for (const auto& [id, check] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = check();
    } catch (const std::exception& e) {
      r = {"exception", false, e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !r.ok;
    std::cout << "criterion " << id << ": " << (r.ok ? "PASS" : "FAIL") << " (" << r.name << ", " << secs
              << " s) " << r.detail << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criterion(s) failed" : std::string("all criteria passed"))
            << std::endl;
  return failed ? 1 : 0;
}
