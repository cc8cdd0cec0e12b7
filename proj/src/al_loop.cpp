#include "flg/al_loop.hpp"

#include "flg/fuzziness.hpp"
#include "flg/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

namespace flg {
namespace {

constexpr std::uint64_t kSelectionStream = 0x5851F42D4C957F2Dull;
constexpr std::uint64_t kHoldoutStream = 0x14057B7EF767814Full;

Eigen::MatrixXd gather_spectra(const HsiCube& cube, const std::vector<int>& pixels) {
  Eigen::MatrixXd out(cube.bands(), static_cast<Eigen::Index>(pixels.size()));
  for (std::size_t i = 0; i < pixels.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = cube.spectrum(pixels[i]);
  return out;
}

std::vector<int> gather_labels(const HsiCube& cube, const std::vector<int>& pixels) {
  std::vector<int> out;
  out.reserve(pixels.size());
  for (int p : pixels) out.push_back(cube.label_at(p));
  return out;
}

/// Pool positions ordered by descending fuzziness with random tie-breaking.
std::vector<int> rank_by_fuzziness(const std::vector<FuzzinessRecord>& table, std::mt19937_64& rng) {
  std::vector<int> tiebreak(table.size());
  std::iota(tiebreak.begin(), tiebreak.end(), 0);
  std::shuffle(tiebreak.begin(), tiebreak.end(), rng);
  std::vector<int> order(table.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (table[a].fuzziness != table[b].fuzziness) return table[a].fuzziness > table[b].fuzziness;
    return tiebreak[a] < tiebreak[b];
  });
  return order;
}

std::vector<int> random_positions(int pool_size, int h, std::mt19937_64& rng) {
  std::vector<int> order(static_cast<std::size_t>(pool_size));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(static_cast<std::size_t>(std::min(h, pool_size)));
  return order;
}

void check_bookkeeping(const SplitState& split, std::size_t expected_total) {
  if (split.train_idx.size() + split.pool_idx.size() != expected_total)
    throw std::logic_error("active learning: train/pool size not conserved");
  std::set<int> seen(split.train_idx.begin(), split.train_idx.end());
  if (seen.size() != split.train_idx.size()) throw std::logic_error("active learning: duplicate training sample");
  for (int p : split.pool_idx)
    if (!seen.insert(p).second) throw std::logic_error("active learning: train and pool overlap");
}

struct Selection {
  std::vector<int> positions;  // into the pool list
  int candidate_count = 0;
  bool fallback = false;
  std::vector<double> spectrum;
  double min_pairwise_distance = 0;
};

Selection select_flg(const HsiCube& cube, const ALConfig& config, const std::vector<int>& pool,
                     const std::vector<FuzzinessRecord>& table, const FuzzinessGroups& groups, std::mt19937_64& rng) {
  Selection sel;
  const auto candidates = select_candidates(groups, config.candidate_cap(), config.high_only);
  sel.candidate_count = static_cast<int>(candidates.size());
  const int h = std::min<int>(config.batch, static_cast<int>(pool.size()));

  if (candidates.empty()) {
    sel.fallback = true;
    auto ranked = rank_by_fuzziness(table, rng);
    ranked.resize(static_cast<std::size_t>(h));
    sel.positions = std::move(ranked);
    return sel;
  }

  std::vector<int> pixels;
  std::vector<int> labels;
  for (const auto& c : candidates) {
    pixels.push_back(pool[c.pool_index]);
    labels.push_back(config.scatter_labels == ScatterLabels::actual ? c.actual : c.predicted);
  }
  const Eigen::MatrixXd spectra = gather_spectra(cube, pixels);
  const auto scatters = compute_scatters(spectra, labels, config.k1, config.k2);
  const auto objective = build_objective(scatters, config.params);
  const int classes = config.classifier.classes;
  const int d = std::clamp(config.projection_dim > 0 ? config.projection_dim : classes - 1, 1, cube.bands());
  const auto basis = discriminant_projection(objective, d);
  const auto full = symmetric_topk(objective.g, cube.bands()).values;
  sel.spectrum.assign(full.data(), full.data() + full.size());

  HeterogeneousSelection picked;
  if (config.patch > 0) {
    std::vector<Eigen::MatrixXd> patches;
    for (int p : pixels) patches.push_back(extract_patch(cube, cube.coord_of(p), config.patch).matrix);
    const int q_r = std::clamp(config.patch_rank, 1, config.patch * config.patch);
    const auto mlda = rmlda_alternate(patches, labels, q_r, d);
    // Spectral projection from the joint objective, spatial from the multilinear fit.
    Eigen::MatrixXd features(d * q_r, static_cast<Eigen::Index>(patches.size()));
    for (std::size_t i = 0; i < patches.size(); ++i) {
      const Eigen::MatrixXd z = basis.vectors.transpose() * patches[i] * mlda.u_r;
      features.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(z.data(), z.size());
    }
    picked = select_heterogeneous(candidates, features, Eigen::MatrixXd::Identity(features.rows(), features.rows()), h);
  } else {
    picked = select_heterogeneous(candidates, spectra, basis.vectors, h);
  }
  sel.positions = picked.pool_indices;
  sel.min_pairwise_distance = picked.min_pairwise_distance;

  // Too few misclassified candidates: top up by fuzziness.
  if (static_cast<int>(sel.positions.size()) < h) {
    std::set<int> chosen(sel.positions.begin(), sel.positions.end());
    for (int pos : rank_by_fuzziness(table, rng)) {
      if (static_cast<int>(sel.positions.size()) == h) break;
      if (chosen.insert(pos).second) sel.positions.push_back(pos);
    }
  }
  return sel;
}

RunResult run_loop(const HsiCube& cube, const ALConfig& config, std::uint64_t seed) {
  const int classes = config.classifier.classes > 0 ? config.classifier.classes : cube.class_count();
  ALConfig cfg = config;
  cfg.classifier.classes = classes;
  cfg.validate(classes);

  // Optional fixed evaluation set, drawn before the initial split.
  std::vector<int> labeled = cube.labeled_pixels();
  std::vector<int> holdout;
  if (cfg.holdout > 0) {
    std::mt19937_64 hrng(seed ^ kHoldoutStream);
    std::shuffle(labeled.begin(), labeled.end(), hrng);
    const auto count = static_cast<std::size_t>(std::floor(cfg.holdout * static_cast<double>(labeled.size())));
    holdout.assign(labeled.begin(), labeled.begin() + static_cast<std::ptrdiff_t>(count));
    labeled.erase(labeled.begin(), labeled.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(holdout.begin(), holdout.end());
    std::sort(labeled.begin(), labeled.end());
  }
  SplitState split = initial_split(labeled, gather_labels(cube, labeled), cfg.initial, seed, cfg.stratified);
  const std::size_t total = labeled.size();

  const Eigen::MatrixXd holdout_spectra = gather_spectra(cube, holdout);
  const std::vector<int> holdout_labels = gather_labels(cube, holdout);

  RunResult result;
  result.seed = seed;
  result.strategy = cfg.strategy;
  std::mt19937_64 rng(seed ^ kSelectionStream);

  for (int iteration = 0;; ++iteration) {
    const auto start = std::chrono::steady_clock::now();
    check_bookkeeping(split, total);

    IterationRecord rec;
    rec.iteration = iteration;
    rec.train_size = static_cast<int>(split.train_idx.size());
    rec.pool_size = static_cast<int>(split.pool_idx.size());

    const auto model = train(cfg.classifier, gather_spectra(cube, split.train_idx),
                             gather_labels(cube, split.train_idx), seed + static_cast<std::uint64_t>(iteration));
    const std::vector<int> pool_labels = gather_labels(cube, split.pool_idx);
    MembershipMatrix memberships;
    if (!split.pool_idx.empty()) memberships = predict_memberships(model, gather_spectra(cube, split.pool_idx));

    const bool use_holdout = !holdout.empty();
    if (use_holdout || !split.pool_idx.empty()) {
      const auto predicted =
          use_holdout ? predict_labels(model, holdout_spectra) : argmax_labels(memberships);
      const auto m = evaluate(use_holdout ? holdout_labels : pool_labels, predicted, classes);
      rec.oa = m.oa;
      rec.aa = m.aa;
      rec.kappa = m.kappa;
      rec.precision = m.precision;
      rec.recall = m.recall;
      rec.f1 = m.f1;
    }

    const bool done = rec.train_size >= cfg.threshold || split.pool_idx.empty();
    if (!done) {
      std::vector<PixelCoord> coords;
      coords.reserve(split.pool_idx.size());
      for (int p : split.pool_idx) coords.push_back(cube.coord_of(p));
      const auto table = build_table(memberships, pool_labels, coords);
      rec.fuzziness_histogram = fuzziness_histogram(table, cfg.histogram_bins);

      Selection sel;
      switch (cfg.strategy) {
        case Strategy::flg: {
          const auto groups = categorize(table);
          rec.q1 = groups.q1;
          rec.q2 = groups.q2;
          sel = select_flg(cube, cfg, split.pool_idx, table, groups, rng);
          break;
        }
        case Strategy::random:
          sel.positions = random_positions(rec.pool_size, cfg.batch, rng);
          break;
        case Strategy::fuzziness_only: {
          auto ranked = rank_by_fuzziness(table, rng);
          ranked.resize(static_cast<std::size_t>(std::min(cfg.batch, rec.pool_size)));
          sel.positions = std::move(ranked);
          break;
        }
      }
      rec.candidate_count = sel.candidate_count;
      rec.fallback = sel.fallback;
      rec.objective_spectrum = std::move(sel.spectrum);
      rec.min_pairwise_distance = sel.min_pairwise_distance;

      std::vector<bool> take(split.pool_idx.size(), false);
      for (int pos : sel.positions) {
        if (take[static_cast<std::size_t>(pos)]) throw std::logic_error("active learning: sample selected twice");
        take[static_cast<std::size_t>(pos)] = true;
        rec.selected.push_back(split.pool_idx[static_cast<std::size_t>(pos)]);
      }
      std::vector<int> remaining;
      remaining.reserve(split.pool_idx.size() - rec.selected.size());
      for (std::size_t i = 0; i < split.pool_idx.size(); ++i)
        if (!take[i]) remaining.push_back(split.pool_idx[i]);
      split.pool_idx = std::move(remaining);
      split.train_idx.insert(split.train_idx.end(), rec.selected.begin(), rec.selected.end());
    }

    rec.duration_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    result.records.push_back(std::move(rec));
    if (done) break;
    if (split.pool_idx.empty() && holdout.empty()) {
      // Nothing left to evaluate on.
      result.pool_exhausted = true;
      check_bookkeeping(split, total);
      break;
    }
  }
  result.pool_exhausted = result.pool_exhausted || split.pool_idx.empty();
  return result;
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::flg: return "flg";
    case Strategy::random: return "random";
    case Strategy::fuzziness_only: return "fuzziness-only";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  for (auto s : {Strategy::flg, Strategy::random, Strategy::fuzziness_only})
    if (to_string(s) == name) return s;
  throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

void ALConfig::validate(int classes) const {
  if (classes < 2) throw std::invalid_argument("config: at least 2 classes required");
  if (initial < 1) throw std::invalid_argument("config: n must be positive");
  if (batch < 1) throw std::invalid_argument("config: h must be positive");
  if (batch > candidate_cap()) throw std::invalid_argument("config: h must not exceed K");
  if (threshold < initial) throw std::invalid_argument("config: threshold must be at least n");
  if (k1 < 0 || k2 < 0) throw std::invalid_argument("config: k1 and k2 must be non-negative");
  if (!(holdout >= 0.0 && holdout < 1.0)) throw std::invalid_argument("config: holdout must lie in [0, 1)");
  if (patch < 0 || (patch > 0 && patch % 2 == 0)) throw std::invalid_argument("config: patch window must be odd");
  if (histogram_bins < 1) throw std::invalid_argument("config: histogram bins must be positive");
  params.validate();
}

RunResult run_experiment(const HsiCube& cube, const ALConfig& config, std::uint64_t seed) {
  return run_loop(cube, config, seed);
}

RunResult run_baseline(const HsiCube& cube, const ALConfig& config, std::uint64_t seed) {
  if (config.strategy == Strategy::flg) throw std::invalid_argument("run_baseline: strategy must be a control arm");
  return run_loop(cube, config, seed);
}

MetricSummary mean_std(const std::vector<double>& values) {
  if (values.empty()) return {};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, values.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0};
}

std::vector<AveragedRecord> average_runs(const std::vector<std::vector<IterationRecord>>& runs) {
  if (runs.empty()) return {};
  const auto len = runs.front().size();
  for (const auto& r : runs)
    if (r.size() != len) throw std::invalid_argument("average_runs: runs differ in length");

  std::vector<AveragedRecord> out(len);
  for (std::size_t i = 0; i < len; ++i) {
    auto collect = [&](auto field) {
      std::vector<double> v;
      for (const auto& r : runs) v.push_back(static_cast<double>(r[i].*field));
      return mean_std(v);
    };
    auto& a = out[i];
    a.iteration = runs.front()[i].iteration;
    a.train_size = collect(&IterationRecord::train_size);
    a.oa = collect(&IterationRecord::oa);
    a.aa = collect(&IterationRecord::aa);
    a.kappa = collect(&IterationRecord::kappa);
    a.precision = collect(&IterationRecord::precision);
    a.recall = collect(&IterationRecord::recall);
    a.f1 = collect(&IterationRecord::f1);
    a.duration_ms = collect(&IterationRecord::duration_ms);
  }
  return out;
}

}  // namespace flg
