#pragma once

// The acceptance battery: fourteen numbered checks, each reporting a measured
// value against its bound. Reports contain no timings, so two runs with the
// same seed serialize identically.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace qcp {

struct SuiteConfig {
  std::uint64_t seed = 20240601;
  /// Monte Carlo trials per game run.
  std::uint64_t trials = 10000;
  /// Worker threads for game runs; 0 picks the hardware concurrency.
  unsigned threads = 0;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
  /// Per-case values behind `measured`.
  nlohmann::json details = nlohmann::json::object();

  nlohmann::json to_json() const;
};

inline constexpr int kSuiteCriteria = 14;

/// Short name of criterion `id` (1-based).
std::string criterion_name(int id);

/// Runs one criterion. Criterion 14 reruns 1..13 twice and compares the
/// serialized results byte for byte.
CriterionResult run_criterion(int id, const SuiteConfig& config);

/// Runs 1..13 once, then checks determinism by rerunning them and comparing
/// with the first pass.
std::vector<CriterionResult> run_suite(const SuiteConfig& config);

/// Criterion 14 from two passes over 1..13: counts results whose
/// serializations differ.
CriterionResult determinism_check(const std::vector<CriterionResult>& first, const std::vector<CriterionResult>& second);

/// {"schema_version", "seed", "trials", "criteria": [...], "pass"}.
nlohmann::json suite_to_json(const std::vector<CriterionResult>& results, const SuiteConfig& config);

}  // namespace qcp
