#pragma once

#include "flg/classify.hpp"
#include "flg/data.hpp"
#include "flg/objective.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flg {

enum class Strategy { flg, random, fuzziness_only };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);

enum class ScatterLabels { actual, predicted };

struct ALConfig {
  ClassifierConfig classifier;
  int initial = 50;         // n
  int batch = 100;          // h
  int candidates = 0;       // K per group; 0 means 10 * h
  int threshold = 2500;     // stop once |X_T| >= threshold
  TradeoffParams params;
  int k1 = 5;
  int k2 = 5;
  int projection_dim = 0;   // d; 0 means C - 1
  Strategy strategy = Strategy::flg;
  bool stratified = false;
  bool high_only = false;
  ScatterLabels scatter_labels = ScatterLabels::actual;
  double holdout = 0.0;     // fraction of labeled pixels kept out for evaluation
  int patch = 0;            // odd window enables the multilinear path; 0 disables
  int patch_rank = 1;       // q_r for the spatial projection
  int histogram_bins = 10;

  int candidate_cap() const { return candidates > 0 ? candidates : 10 * batch; }
  void validate(int classes) const;
};

struct IterationRecord {
  int iteration = 0;
  int train_size = 0;
  int pool_size = 0;
  double oa = 0, aa = 0, kappa = 0, precision = 0, recall = 0, f1 = 0;
  int candidate_count = 0;
  bool fallback = false;
  std::vector<int> selected;  // pixel indices added after this evaluation
  double duration_ms = 0;

  // Diagnostics
  std::vector<int> fuzziness_histogram;
  std::optional<double> q1, q2;
  std::vector<double> objective_spectrum;
  double min_pairwise_distance = 0;
};

struct RunResult {
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::flg;
  std::vector<IterationRecord> records;
  bool pool_exhausted = false;
};

/// Runs the active-learning loop on a normalized cube. Ground-truth labels
/// stand in for the oracle. Deterministic in (cube, config, seed).
RunResult run_experiment(const HsiCube& cube, const ALConfig& config, std::uint64_t seed);

/// Same loop with the selection step replaced by the control strategy in
/// `config.strategy` (random or fuzziness-only).
RunResult run_baseline(const HsiCube& cube, const ALConfig& config, std::uint64_t seed);

struct MetricSummary {
  double mean = 0;
  double std = 0;  // sample standard deviation; 0 for a single run
};

struct AveragedRecord {
  int iteration = 0;
  MetricSummary train_size, oa, aa, kappa, precision, recall, f1, duration_ms;
};

std::vector<AveragedRecord> average_runs(const std::vector<std::vector<IterationRecord>>& runs);

MetricSummary mean_std(const std::vector<double>& values);

}  // namespace flg
