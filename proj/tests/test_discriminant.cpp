#include "flg/discriminant.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <random>

using namespace flg;
using flg::testing::max_abs;

namespace {

struct Instance {
  Eigen::MatrixXd x;
  std::vector<int> labels;
};

Instance random_instance(std::mt19937_64& rng, int n = 60, int dim = 8, int classes = 3) {
  Instance in{testing::random_matrix(dim, n, rng), testing::random_labels(n, classes, rng)};
  for (int i = 0; i < n; ++i) in.x.col(i).array() += 0.7 * in.labels[static_cast<std::size_t>(i)];
  return in;
}

// Column-space projector, insensitive to sign and rotation within the span.
// |sum_ij w_ij ||u^T(x_i - x_j)||^2 - 2 u^T S u|, relative to the edge sum.
double pairwise_edge_sum_check(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w, const Eigen::MatrixXd& u,
                               const Eigen::MatrixXd& s) {
  const double lhs = testing::pairwise_edge_sum(x, w, u);
  const double rhs = 2.0 * (u.transpose() * s * u)(0, 0);
  return std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
}

Eigen::MatrixXd projector(const Eigen::MatrixXd& u) { return u * (u.transpose() * u).inverse() * u.transpose(); }

}  // namespace

TEST_CASE("global scatter hand case") {
  Eigen::MatrixXd x(1, 3);
  x << 0, 2, 4;
  const auto s = global_scatter(x, {1, 1, 2});
  // M = 2, M_1 = 1, M_2 = 4: between 2*1 + 1*4, within 1 + 1
  CHECK(s.between(0, 0) == doctest::Approx(6.0));
  CHECK(s.within(0, 0) == doctest::Approx(2.0));
  CHECK_FALSE(s.single_class);
  CHECK(global_scatter(x, {2, 2, 2}).single_class);
}

TEST_CASE("between plus within equals the total scatter") {
  std::mt19937_64 rng(101);
  for (int t = 0; t < 20; ++t) {
    const auto in = random_instance(rng);
    const auto s = global_scatter(in.x, in.labels);
    CHECK(max_abs(s.between + s.within - testing::total_scatter(in.x)) <= 1e-8);
    CHECK(max_abs(s.between - s.between.transpose()) == 0.0);
  }
}

TEST_CASE("local graphs: symmetric, empty diagonal, class-respecting") {
  std::mt19937_64 rng(5);
  const auto in = random_instance(rng, 40, 5, 3);
  const auto g = local_graphs(in.x, in.labels, 3, 4);
  const auto n = in.x.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    CHECK(g.w_lw(i, i) == 0.0);
    CHECK(g.w_lb(i, i) == 0.0);
    int same = 0, diff = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      CHECK(g.w_lw(i, j) == g.w_lw(j, i));
      CHECK(g.w_lb(i, j) == g.w_lb(j, i));
      const bool same_class = in.labels[static_cast<std::size_t>(i)] == in.labels[static_cast<std::size_t>(j)];
      if (g.w_lw(i, j) != 0) {
        CHECK(same_class);
        ++same;
      }
      if (g.w_lb(i, j) != 0) {
        CHECK_FALSE(same_class);
        ++diff;
      }
    }
    CHECK(same >= 3);
    CHECK(diff >= 4);
    CHECK(g.d_lw[i] == doctest::Approx(g.w_lw.col(i).sum()));
  }
}

TEST_CASE("local graphs connect each sample to its true nearest same-class neighbour") {
  Eigen::MatrixXd x(1, 5);
  x << 0, 1, 3, 10, 10.5;
  const std::vector<int> y{1, 1, 1, 2, 2};
  const auto g = local_graphs(x, y, 1, 1);
  CHECK(g.w_lw(0, 1) == 1.0);
  CHECK(g.w_lw(2, 1) == 1.0);
  CHECK(g.w_lw(0, 2) == 0.0);
  CHECK(g.w_lb(2, 3) == 1.0);  // 3's nearest other-class point is 10
  CHECK(g.w_lb(3, 2) == 1.0);
}

TEST_CASE("Laplacian quadratic form equals half the pairwise edge sum") {
  std::mt19937_64 rng(202);
  for (int t = 0; t < 20; ++t) {
    const auto in = random_instance(rng);
    const auto s = compute_scatters(in.x, in.labels, 5, 5);
    for (int r = 0; r < 5; ++r) {
      const Eigen::MatrixXd u = testing::random_matrix(8, 1, rng);
      const double lw = pairwise_edge_sum_check(in.x, s.graphs.w_lw, u, s.s_lw);
      const double lb = pairwise_edge_sum_check(in.x, s.graphs.w_lb, u, s.s_lb);
      CHECK(lw <= 1e-8);
      CHECK(lb <= 1e-8);
    }
  }
}

TEST_CASE("symmetric_topk trace matches an independent Jacobi solve") {
  std::mt19937_64 rng(303);
  for (int t = 0; t < 10; ++t) {
    const Eigen::MatrixXd g = testing::random_symmetric(8, rng);
    for (int d : {1, 2, 5}) {
      const auto b = symmetric_topk(g, d);
      const double trace = (b.vectors.transpose() * g * b.vectors).trace();
      CHECK(std::abs(trace - testing::top_sum(testing::jacobi_eigenvalues(g), d)) <= 1e-8);
      CHECK(max_abs(b.vectors.transpose() * b.vectors - Eigen::MatrixXd::Identity(d, d)) <= 1e-10);
      for (int i = 1; i < d; ++i) CHECK(b.values[i] <= b.values[i - 1]);
    }
  }
}

TEST_CASE("symmetric_topk subspace is invariant to shift and positive scale") {
  std::mt19937_64 rng(304);
  for (int t = 0; t < 10; ++t) {
    const Eigen::MatrixXd g = testing::random_symmetric(7, rng);
    const auto base = symmetric_topk(g, 3);
    const auto shifted = symmetric_topk(g + 4.5 * Eigen::MatrixXd::Identity(7, 7), 3);
    const auto scaled = symmetric_topk(3.0 * g, 3);
    CHECK(max_abs(projector(base.vectors) - projector(shifted.vectors)) <= 1e-8);
    CHECK(max_abs(projector(base.vectors) - projector(scaled.vectors)) <= 1e-8);
    CHECK(max_abs(base.vectors - scaled.vectors) <= 1e-8);  // sign convention holds too
  }
}

TEST_CASE("fix_signs makes the largest-magnitude entry positive") {
  Eigen::MatrixXd v(3, 2);
  v << 0.1, 0.3, -0.9, 0.2, 0.2, -0.5;
  fix_signs(v);
  CHECK(v(1, 0) == 0.9);
  CHECK(v(2, 1) == 0.5);
  CHECK(v(0, 1) == -0.3);
}

TEST_CASE("generalized_topk matches the eigenvalues of B^-1 A") {
  std::mt19937_64 rng(404);
  for (int t = 0; t < 10; ++t) {
    const Eigen::MatrixXd a = testing::random_symmetric(6, rng);
    const Eigen::MatrixXd b = testing::random_spd(6, rng);
    const auto r = generalized_topk(a, b, 3, 0.0);
    const auto ref = testing::inverse_multiply_eigenvalues(a, b);
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(r.values[i] - ref[static_cast<std::size_t>(i)]) <= 1e-6 * (1 + std::abs(ref[static_cast<std::size_t>(i)])));
      const Eigen::VectorXd u = r.vectors.col(i);
      CHECK((a * u - r.values[i] * b * u).norm() <= 1e-8 * (1 + a.norm()));
    }
    CHECK(max_abs(r.vectors.transpose() * b * r.vectors - Eigen::MatrixXd::Identity(3, 3)) <= 1e-8);
  }
}

TEST_CASE("generalized_topk regularizes a singular B") {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 3);
  b(0, 0) = 1;
  b(1, 1) = 1;
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(generalized_topk(a, b, 1, 0.0), DiscriminantError);
  const auto r = generalized_topk(a, b, 1, 1e-6);
  CHECK(std::isfinite(r.values[0]));
  CHECK(r.values[0] > 1e5);
}

TEST_CASE("dmlda_step leaves s_b - xi s_w with a non-positive top eigenvalue") {
  std::mt19937_64 rng(505);
  for (int t = 0; t < 10; ++t) {
    const auto in = random_instance(rng, 30, 5, 2);
    const auto s = global_scatter(in.x, in.labels);
    const auto r = dmlda_step(s.between, s.within, 2);
    const Eigen::MatrixXd m = s.between - r.xi * s.within;
    CHECK(testing::jacobi_eigenvalues(m)[0] <= 1e-8 * (1 + s.between.norm()));
    CHECK(std::abs(r.xi - testing::inverse_multiply_eigenvalues(s.between, s.within)[0]) <= 1e-6 * (1 + r.xi));
  }
}

TEST_CASE("rmlda trace ratio never decreases across iterations") {
  std::mt19937_64 rng(606);
  for (int t = 0; t < 10; ++t) {
    std::vector<Eigen::MatrixXd> patches;
    std::vector<int> labels;
    for (int i = 0; i < 24; ++i) {
      const int y = i % 2 + 1;
      Eigen::MatrixXd p = testing::random_matrix(6, 9, rng);
      p.array() += 0.8 * y * (1 + (t % 3));
      p.row(y).array() += 1.0;
      patches.push_back(p);
      labels.push_back(y);
    }
    const auto st = rmlda_alternate(patches, labels, 3, 2);
    REQUIRE(st.ratio_history.size() >= 1);
    for (std::size_t i = 1; i < st.ratio_history.size(); ++i)
      CHECK(st.ratio_history[i] >= st.ratio_history[i - 1] - 1e-9);
    CHECK(st.u_r.rows() == 9);
    CHECK(st.u_r.cols() == 3);
    CHECK(st.u_s.rows() == 6);
    CHECK(st.u_s.cols() == 2);
    CHECK(std::abs(mlda_trace_ratio(patches, labels, st.u_r, st.u_s) - st.ratio_history.back()) <= 1e-9);
  }
}

TEST_CASE("rmlda on identical classes regularizes instead of dividing by zero") {
  std::vector<Eigen::MatrixXd> patches;
  std::vector<int> labels;
  for (int i = 0; i < 6; ++i) {
    patches.push_back(Eigen::MatrixXd::Constant(3, 4, i % 2 ? 1.0 : 2.0));
    labels.push_back(i % 2 + 1);
  }
  const auto st = rmlda_alternate(patches, labels, 2, 2);
  CHECK(st.regularized);
  for (double r : st.ratio_history) CHECK(std::isfinite(r));
}

TEST_CASE("shape errors") {
  CHECK_THROWS_AS(symmetric_topk(Eigen::MatrixXd::Identity(3, 3), 4), DiscriminantError);
  CHECK_THROWS_AS(global_scatter(Eigen::MatrixXd::Zero(2, 3), {1, 2}), DiscriminantError);
}
