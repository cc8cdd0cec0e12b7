#include "flg/al_loop.hpp"

#include <doctest.h>

#include <set>

using namespace flg;

namespace {

HsiCube small_cube(double noise = 0.08, std::uint64_t seed = 1) {
  SynthSpec spec;
  spec.height = 24;
  spec.width = 24;
  spec.tile = 6;
  spec.bands = 10;
  spec.noise_sigma = noise;
  return normalize(synth_generate(spec, seed));
}

ALConfig small_config(Strategy s = Strategy::flg) {
  ALConfig c;
  c.classifier.classes = 3;
  c.classifier.mlr_epochs = 100;
  c.initial = 20;
  c.batch = 10;
  c.threshold = 80;
  c.strategy = s;
  return c;
}

RunResult run(const HsiCube& cube, const ALConfig& c, std::uint64_t seed) {
  return c.strategy == Strategy::flg ? run_experiment(cube, c, seed) : run_baseline(cube, c, seed);
}

}  // namespace

TEST_CASE("strategy names round trip") {
  for (auto s : {Strategy::flg, Strategy::random, Strategy::fuzziness_only}) CHECK(parse_strategy(to_string(s)) == s);
  CHECK(to_string(Strategy::fuzziness_only) == "fuzziness-only");
  CHECK_THROWS(parse_strategy("greedy"));
}

TEST_CASE("every strategy conserves the labeled set and grows by h") {
  const auto cube = small_cube();
  const auto labeled = static_cast<int>(cube.labeled_pixels().size());
  for (auto s : {Strategy::flg, Strategy::random, Strategy::fuzziness_only}) {
    CAPTURE(to_string(s));
    const auto r = run(cube, small_config(s), 3);
    REQUIRE(r.records.size() == 7);  // 20, 30, ..., 80
    std::set<int> seen;
    for (std::size_t i = 0; i < r.records.size(); ++i) {
      const auto& rec = r.records[i];
      CHECK(rec.iteration == static_cast<int>(i));
      CHECK(rec.train_size == 20 + 10 * static_cast<int>(i));
      CHECK(rec.train_size + rec.pool_size == labeled);
      CHECK(rec.oa >= 0.0);
      CHECK(rec.oa <= 1.0);
      if (i + 1 < r.records.size()) CHECK(rec.selected.size() == 10);
      else CHECK(rec.selected.empty());
      for (int p : rec.selected) {
        CHECK(seen.insert(p).second);
        CHECK(cube.label_at(p) != 0);
      }
    }
  }
}

TEST_CASE("a threshold equal to n stops after the first evaluation") {
  const auto cube = small_cube();
  auto c = small_config();
  c.threshold = c.initial;
  const auto r = run_experiment(cube, c, 1);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].train_size == c.initial);
  CHECK(r.records[0].selected.empty());
}

TEST_CASE("runs are deterministic in the seed") {
  const auto cube = small_cube();
  const auto c = small_config();
  const auto a = run_experiment(cube, c, 5);
  const auto b = run_experiment(cube, c, 5);
  const auto other = run_experiment(cube, c, 6);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].oa == b.records[i].oa);
    CHECK(a.records[i].kappa == b.records[i].kappa);
    CHECK(a.records[i].selected == b.records[i].selected);
  }
  CHECK(a.records[0].selected != other.records[0].selected);
}

TEST_CASE("pool exhaustion ends the run cleanly") {
  SynthSpec spec;
  spec.height = 8;
  spec.width = 8;
  spec.tile = 2;
  spec.bands = 6;
  const auto cube = normalize(synth_generate(spec, 2));
  auto c = small_config();
  c.initial = 10;
  c.batch = 15;
  c.threshold = 10000;
  const auto r = run_experiment(cube, c, 1);
  CHECK(r.pool_exhausted);
  // The last evaluation takes whatever is left; with no pool there is nothing more to score.
  const auto& last = r.records.back();
  CHECK(last.pool_size < c.batch);
  CHECK(static_cast<int>(last.selected.size()) == last.pool_size);
  CHECK(last.train_size + last.pool_size == static_cast<int>(cube.labeled_pixels().size()));
}

TEST_CASE("separable data with no misclassified pool samples falls back to fuzziness order") {
  SynthSpec spec;
  spec.height = 24;
  spec.width = 24;
  spec.tile = 6;
  spec.bands = 6;
  spec.noise_sigma = 1e-4;
  spec.separation = 0.4;
  const auto cube = normalize(synth_generate(spec, 4));
  auto c = small_config();
  c.classifier.algorithm = Algorithm::knn;
  c.classifier.k = 1;
  c.initial = 30;
  c.threshold = 40;
  const auto r = run_experiment(cube, c, 2);
  REQUIRE(r.records.size() == 2);
  CHECK(r.records[0].oa == 1.0);
  CHECK(r.records[0].candidate_count == 0);
  CHECK(r.records[0].fallback);
  CHECK(r.records[0].selected.size() == 10);
}

TEST_CASE("holdout evaluation keeps a fixed set outside train and pool") {
  const auto cube = small_cube();
  const auto labeled = static_cast<int>(cube.labeled_pixels().size());
  auto c = small_config(Strategy::random);
  c.holdout = 0.25;
  const auto r = run_baseline(cube, c, 1);
  const int held = labeled - r.records[0].train_size - r.records[0].pool_size;
  CHECK(held > 0);
  for (const auto& rec : r.records) CHECK(labeled - rec.train_size - rec.pool_size == held);
}

TEST_CASE("the multilinear patch path runs and conserves samples") {
  const auto cube = small_cube();
  auto c = small_config();
  c.patch = 3;
  c.threshold = 40;
  const auto r = run_experiment(cube, c, 1);
  REQUIRE(r.records.size() == 3);
  CHECK(r.records[0].selected.size() == 10);
}

TEST_CASE("configuration validation") {
  const auto cube = small_cube();
  auto c = small_config();
  CHECK_THROWS(run_baseline(cube, c, 1));
  c.batch = 0;
  CHECK_THROWS(run_experiment(cube, c, 1));
  c = small_config();
  c.params.omega = 1.5;
  CHECK_THROWS(run_experiment(cube, c, 1));
  c = small_config();
  c.initial = 100000;
  CHECK_THROWS(run_experiment(cube, c, 1));
}

TEST_CASE("mean and sample standard deviation") {
  const auto s = mean_std({1.0, 2.0, 3.0});
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.std == doctest::Approx(1.0));
  CHECK(mean_std({4.0}).std == 0.0);
}

TEST_CASE("average_runs aggregates per iteration and rejects ragged input") {
  IterationRecord a, b;
  a.oa = 0.5;
  b.oa = 0.7;
  a.train_size = b.train_size = 10;
  const auto avg = average_runs({{a}, {b}});
  REQUIRE(avg.size() == 1);
  CHECK(avg[0].oa.mean == doctest::Approx(0.6));
  CHECK(avg[0].oa.std == doctest::Approx(std::sqrt(0.02)));
  CHECK_THROWS(average_runs({{a}, {a, b}}));
}
