#include "flg/objective.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace flg;
using flg::testing::max_abs;

namespace {

ScatterSet random_scatters(std::mt19937_64& rng) {
  Eigen::MatrixXd x = testing::random_matrix(6, 40, rng);
  const auto y = testing::random_labels(40, 3, rng);
  for (int i = 0; i < 40; ++i) x.col(i).array() += 0.5 * y[static_cast<std::size_t>(i)];
  return compute_scatters(x, y, 4, 4);
}

Eigen::MatrixXd sym(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

FuzzinessRecord cand(double f, int pool_index) {
  FuzzinessRecord r;
  r.fuzziness = f;
  r.pool_index = pool_index;
  r.actual = 1;
  r.predicted = 2;
  return r;
}

}  // namespace

TEST_CASE("balanced weights give a quarter of each scatter") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 10; ++t) {
    const auto s = random_scatters(rng);
    const auto g = build_objective(s, {0.5, 0.5, 0.5}).g;
    const Eigen::MatrixXd expected = 0.25 * (s.s_gb + s.s_lb - s.s_gw - s.s_lw);
    CHECK(max_abs(g - sym(expected)) <= 1e-12 * (1 + max_abs(expected)));
  }
}

TEST_CASE("endpoint weights reduce exactly") {
  std::mt19937_64 rng(2);
  const auto s = random_scatters(rng);
  CHECK(build_objective(s, {1.0, 0.3, 1.0}).g == sym(s.s_gb));
  CHECK(build_objective(s, {1.0, 0.3, 0.0}).g == sym(s.s_lb));
  CHECK(build_objective(s, {0.0, 1.0, 0.7}).g == sym(Eigen::MatrixXd(-s.s_gw)));
  CHECK(build_objective(s, {0.0, 0.0, 0.7}).g == sym(Eigen::MatrixXd(-s.s_lw)));
  CHECK(combine_within(s.s_gw, s.s_lw, 1.0) == s.s_gw);
  CHECK(combine_between(s.s_gb, s.s_lb, 0.0) == s.s_lb);
}

TEST_CASE("objective is symmetric and its projection orthonormal") {
  std::mt19937_64 rng(3);
  const auto s = random_scatters(rng);
  const auto obj = build_objective(s, {0.6, 0.4, 0.2});
  CHECK(obj.g == obj.g.transpose());
  const auto u = discriminant_projection(obj, 2);
  CHECK(max_abs(u.vectors.transpose() * u.vectors - Eigen::MatrixXd::Identity(2, 2)) <= 1e-10);
}

TEST_CASE("trade-off weights outside [0, 1] are rejected") {
  std::mt19937_64 rng(4);
  const auto s = random_scatters(rng);
  CHECK_THROWS_AS(build_objective(s, {1.5, 0.5, 0.5}), ObjectiveError);
  CHECK_THROWS_AS(build_objective(s, {0.5, -0.1, 0.5}), ObjectiveError);
  CHECK_THROWS_AS(TradeoffParams({0.5, 0.5, 2.0}).validate(), ObjectiveError);
}

TEST_CASE("heterogeneous selection: seed by fuzziness then farthest point") {
  // Four candidates on a line; projection is the identity.
  std::vector<FuzzinessRecord> c{cand(0.9, 10), cand(0.8, 11), cand(0.7, 12), cand(0.6, 13)};
  Eigen::MatrixXd x(1, 4);
  x << 0.0, 0.1, 5.0, 2.0;
  const Eigen::MatrixXd u = Eigen::MatrixXd::Identity(1, 1);
  const auto s = select_heterogeneous(c, x, u, 3);
  REQUIRE(s.pool_indices.size() == 3);
  CHECK(s.pool_indices[0] == 10);
  CHECK(s.pool_indices[1] == 12);
  CHECK(s.pool_indices[2] == 13);
  CHECK(s.min_pairwise_distance == doctest::Approx(2.0));
}

TEST_CASE("heterogeneous selection ties go to the lower pool index") {
  std::vector<FuzzinessRecord> c{cand(0.9, 5), cand(0.9, 2), cand(0.5, 7), cand(0.5, 3)};
  Eigen::MatrixXd x(1, 4);
  x << 0.0, 1.0, 2.0, 0.0;  // candidates 2 and 3 are both at distance 1 from the seed
  const auto s = select_heterogeneous(c, x, Eigen::MatrixXd::Identity(1, 1), 2);
  CHECK(s.pool_indices[0] == 2);
  CHECK(s.pool_indices[1] == 3);
}

TEST_CASE("heterogeneous selection: distinct picks, capped by candidates, deterministic") {
  std::mt19937_64 rng(9);
  std::vector<FuzzinessRecord> c;
  for (int i = 0; i < 30; ++i) c.push_back(cand(0.5 + i / 100.0, i));
  const Eigen::MatrixXd x = testing::random_matrix(6, 30, rng);
  const Eigen::MatrixXd u = testing::random_matrix(6, 2, rng);
  const auto a = select_heterogeneous(c, x, u, 10);
  const auto b = select_heterogeneous(c, x, u, 10);
  CHECK(a.pool_indices == b.pool_indices);
  std::set<int> uniq(a.pool_indices.begin(), a.pool_indices.end());
  CHECK(uniq.size() == 10);

  // The second pick is the candidate farthest from the seed in projected space.
  const Eigen::MatrixXd z = u.transpose() * x;
  const int seed = a.pool_indices[0];
  CHECK(seed == 29);
  int far = -1;
  double best = -1;
  for (int i = 0; i < 30; ++i)
    if ((z.col(i) - z.col(seed)).norm() > best) best = (z.col(i) - z.col(seed)).norm(), far = i;
  CHECK(a.pool_indices[1] == far);

  const auto all = select_heterogeneous(c, x, u, 100);
  CHECK(all.pool_indices.size() == 30);
  CHECK_THROWS_AS(select_heterogeneous({}, Eigen::MatrixXd(6, 0), u, 3), ObjectiveError);
}
