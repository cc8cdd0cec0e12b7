#include "flg/discriminant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace flg {
namespace {

void check_samples(const Eigen::MatrixXd& x, const std::vector<int>& labels) {
  if (x.cols() == 0) throw DiscriminantError("empty sample set");
  if (x.cols() != static_cast<Eigen::Index>(labels.size())) throw DiscriminantError("label count mismatch");
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& g) { return 0.5 * (g + g.transpose()); }

// Column-orthonormal basis of span(u), sign-fixed.
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& u) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(u);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(u.rows(), u.cols());
  fix_signs(q);
  return q;
}

double projected_trace(const Eigen::MatrixXd& s, const Eigen::MatrixXd& u) { return (u.transpose() * s * u).trace(); }

// Maximizes tr(U^T B U) / tr(U^T W U) over orthonormal U with d columns by the
// iterative trace-ratio scheme, starting from `start`. The ratio never drops
// below the start's ratio.
Eigen::MatrixXd maximize_trace_ratio(const Eigen::MatrixXd& b, const Eigen::MatrixXd& w, Eigen::MatrixXd start,
                                     int d) {
  double ratio = projected_trace(b, start) / projected_trace(w, start);
  for (int it = 0; it < 200; ++it) {
    Eigen::MatrixXd next = symmetric_topk(b - ratio * w, d).vectors;
    const double next_ratio = projected_trace(b, next) / projected_trace(w, next);
    if (!(next_ratio > ratio)) break;
    const bool settled = next_ratio - ratio <= 1e-15 * std::abs(next_ratio);
    start = std::move(next);
    ratio = next_ratio;
    if (settled) break;
  }
  return start;
}

struct PatchMeans {
  Eigen::MatrixXd overall;
  std::vector<Eigen::MatrixXd> means;
  std::vector<int> counts;
  std::vector<int> class_of;  // per-patch index into means
};

PatchMeans patch_means(const std::vector<Eigen::MatrixXd>& patches, const std::vector<int>& labels) {
  if (patches.empty()) throw DiscriminantError("rmlda: empty patch set");
  if (patches.size() != labels.size()) throw DiscriminantError("rmlda: label count mismatch");
  const auto rows = patches.front().rows(), cols = patches.front().cols();
  std::map<int, int> slot;
  for (int l : labels) slot.emplace(l, 0);
  int next = 0;
  for (auto& [label, s] : slot) s = next++;

  PatchMeans pm;
  pm.overall = Eigen::MatrixXd::Zero(rows, cols);
  pm.means.assign(slot.size(), Eigen::MatrixXd::Zero(rows, cols));
  pm.counts.assign(slot.size(), 0);
  for (std::size_t i = 0; i < patches.size(); ++i) {
    if (patches[i].rows() != rows || patches[i].cols() != cols) throw DiscriminantError("rmlda: patch shape mismatch");
    const int s = slot[labels[i]];
    pm.class_of.push_back(s);
    pm.means[s] += patches[i];
    pm.counts[s] += 1;
    pm.overall += patches[i];
  }
  pm.overall /= static_cast<double>(patches.size());
  for (std::size_t s = 0; s < pm.means.size(); ++s) pm.means[s] /= pm.counts[s];
  return pm;
}

}  // namespace

ClassMeans class_means(const Eigen::MatrixXd& x, const std::vector<int>& labels) {
  check_samples(x, labels);
  std::map<int, std::pair<Eigen::VectorXd, int>> acc;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, fresh] = acc.try_emplace(labels[i], Eigen::VectorXd::Zero(x.rows()), 0);
    it->second.first += x.col(static_cast<Eigen::Index>(i));
    it->second.second += 1;
  }
  ClassMeans cm;
  cm.overall = x.rowwise().mean();
  for (auto& [label, sum_count] : acc) {
    cm.classes.push_back(label);
    cm.means.push_back(sum_count.first / sum_count.second);
    cm.counts.push_back(sum_count.second);
  }
  return cm;
}

GlobalScatter global_scatter(const Eigen::MatrixXd& x, const std::vector<int>& labels) {
  const auto cm = class_means(x, labels);
  const auto dim = x.rows();
  GlobalScatter gs{Eigen::MatrixXd::Zero(dim, dim), Eigen::MatrixXd::Zero(dim, dim), cm.classes.size() < 2};
  std::map<int, std::size_t> slot;
  for (std::size_t j = 0; j < cm.classes.size(); ++j) {
    slot[cm.classes[j]] = j;
    const Eigen::VectorXd diff = cm.means[j] - cm.overall;
    gs.between.noalias() += cm.counts[j] * diff * diff.transpose();
  }
  Eigen::MatrixXd centered(dim, x.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i) centered.col(i) = x.col(i) - cm.means[slot[labels[i]]];
  gs.within.noalias() = centered * centered.transpose();
  gs.between = symmetrize(gs.between);
  gs.within = symmetrize(gs.within);
  return gs;
}

LocalGraphs local_graphs(const Eigen::MatrixXd& x, const std::vector<int>& labels, int k1, int k2) {
  check_samples(x, labels);
  if (k1 < 0 || k2 < 0) throw DiscriminantError("local_graphs: neighbour counts must be non-negative");
  const auto n = static_cast<int>(x.cols());

  Eigen::MatrixXd dist2(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) dist2(i, j) = (x.col(i) - x.col(j)).squaredNorm();

  LocalGraphs g;
  g.k1 = k1;
  g.k2 = k2;
  g.w_lw = Eigen::MatrixXd::Zero(n, n);
  g.w_lb = Eigen::MatrixXd::Zero(n, n);
  std::vector<std::pair<double, int>> same, other;
  for (int i = 0; i < n; ++i) {
    same.clear();
    other.clear();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      (labels[j] == labels[i] ? same : other).emplace_back(dist2(i, j), j);
    }
    // Classes with fewer than k + 1 members connect to everything available.
    const auto link = [&](std::vector<std::pair<double, int>>& cand, int k, Eigen::MatrixXd& w) {
      const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), cand.size());
      std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end());
      for (std::size_t t = 0; t < take; ++t) {
        w(i, cand[t].second) = 1.0;
        w(cand[t].second, i) = 1.0;
      }
    };
    link(same, k1, g.w_lw);
    link(other, k2, g.w_lb);
  }
  g.d_lw = g.w_lw.colwise().sum().transpose();
  g.d_lb = g.w_lb.colwise().sum().transpose();
  return g;
}

LocalScatter local_scatter(const Eigen::MatrixXd& x, const LocalGraphs& graphs) {
  if (graphs.w_lw.rows() != x.cols() || graphs.w_lb.rows() != x.cols())
    throw DiscriminantError("local_scatter: graph/sample size mismatch");
  LocalScatter s;
  s.within = symmetrize(x * graphs.laplacian_lw() * x.transpose());
  s.between = symmetrize(x * graphs.laplacian_lb() * x.transpose());
  return s;
}

ScatterSet compute_scatters(const Eigen::MatrixXd& x, const std::vector<int>& labels, int k1, int k2) {
  const auto global = global_scatter(x, labels);
  auto graphs = local_graphs(x, labels, k1, k2);
  const auto local = local_scatter(x, graphs);
  return {global.within, global.between, local.within, local.between, std::move(graphs)};
}

void fix_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index arg = 0;
    vectors.col(c).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, c) < 0) vectors.col(c) *= -1.0;
  }
}

EigenBasis symmetric_topk(const Eigen::MatrixXd& g, int d) {
  if (g.rows() != g.cols()) throw DiscriminantError("symmetric_topk: matrix not square");
  if (d < 0 || d > g.rows()) throw DiscriminantError("symmetric_topk: d exceeds dimension");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(g));
  if (es.info() != Eigen::Success) throw DiscriminantError("symmetric_topk: eigensolver failed");
  EigenBasis out{es.eigenvectors().rightCols(d).rowwise().reverse(), es.eigenvalues().tail(d).reverse()};
  fix_signs(out.vectors);
  return out;
}

EigenBasis generalized_topk(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int d, double eps) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
    throw DiscriminantError("generalized_topk: shape mismatch");
  if (d < 0 || d > a.rows()) throw DiscriminantError("generalized_topk: d exceeds dimension");
  const auto dim = a.rows();
  Eigen::MatrixXd breg = symmetrize(b);
  breg.diagonal().array() += eps * breg.trace() / static_cast<double>(dim);
  Eigen::LLT<Eigen::MatrixXd> llt(breg);
  if (llt.info() != Eigen::Success || (llt.matrixL().toDenseMatrix().diagonal().array() <= 0).any())
    throw DiscriminantError("generalized_topk: regularized B is not positive definite");

  // C = L^-1 A L^-T, then u = L^-T v.
  const auto lower = llt.matrixL();
  Eigen::MatrixXd c = lower.solve(symmetrize(a));
  c = lower.solve(c.transpose()).transpose();
  auto reduced = symmetric_topk(c, d);
  EigenBasis out{llt.matrixU().solve(reduced.vectors), reduced.values};
  fix_signs(out.vectors);
  return out;
}

DmldaResult dmlda_step(const Eigen::MatrixXd& s_b, const Eigen::MatrixXd& s_w, int d, double eps) {
  Eigen::LLT<Eigen::MatrixXd> probe(symmetrize(s_w));
  const bool definite = probe.info() == Eigen::Success &&
                        probe.matrixL().toDenseMatrix().diagonal().minCoeff() >
                            1e-7 * std::sqrt(std::max(s_w.diagonal().maxCoeff(), 0.0));
  DmldaResult r;
  r.xi = generalized_topk(s_b, s_w, 1, definite ? 0.0 : eps).values[0];
  r.basis = symmetric_topk(s_b - r.xi * s_w, d);
  return r;
}

PatchScatter spectral_patch_scatter(const std::vector<Eigen::MatrixXd>& patches, const std::vector<int>& labels,
                                    const Eigen::MatrixXd& u_r) {
  const auto pm = patch_means(patches, labels);
  const Eigen::MatrixXd proj = u_r * u_r.transpose();
  const auto dim = pm.overall.rows();
  PatchScatter s{Eigen::MatrixXd::Zero(dim, dim), Eigen::MatrixXd::Zero(dim, dim)};
  for (std::size_t j = 0; j < pm.means.size(); ++j) {
    const Eigen::MatrixXd diff = pm.means[j] - pm.overall;
    s.between += pm.counts[j] * diff * proj * diff.transpose();
  }
  for (std::size_t i = 0; i < patches.size(); ++i) {
    const Eigen::MatrixXd diff = patches[i] - pm.means[pm.class_of[i]];
    s.within += diff * proj * diff.transpose();
  }
  s.between = symmetrize(s.between);
  s.within = symmetrize(s.within);
  return s;
}

PatchScatter spatial_patch_scatter(const std::vector<Eigen::MatrixXd>& patches, const std::vector<int>& labels,
                                   const Eigen::MatrixXd& u_s) {
  const auto pm = patch_means(patches, labels);
  const Eigen::MatrixXd proj = u_s * u_s.transpose();
  const auto dim = pm.overall.cols();
  PatchScatter s{Eigen::MatrixXd::Zero(dim, dim), Eigen::MatrixXd::Zero(dim, dim)};
  for (std::size_t j = 0; j < pm.means.size(); ++j) {
    const Eigen::MatrixXd diff = pm.means[j] - pm.overall;
    s.between += pm.counts[j] * diff.transpose() * proj * diff;
  }
  for (std::size_t i = 0; i < patches.size(); ++i) {
    const Eigen::MatrixXd diff = patches[i] - pm.means[pm.class_of[i]];
    s.within += diff.transpose() * proj * diff;
  }
  s.between = symmetrize(s.between);
  s.within = symmetrize(s.within);
  return s;
}

double mlda_trace_ratio(const std::vector<Eigen::MatrixXd>& patches, const std::vector<int>& labels,
                        const Eigen::MatrixXd& u_r, const Eigen::MatrixXd& u_s) {
  const auto s = spectral_patch_scatter(patches, labels, u_r);
  return projected_trace(s.between, u_s) / projected_trace(s.within, u_s);
}

MldaState rmlda_alternate(const std::vector<Eigen::MatrixXd>& patches, const std::vector<int>& labels, int q_r,
                          int q_s, int max_iter, double tol) {
  if (patches.empty()) throw DiscriminantError("rmlda: empty patch set");
  const auto l_s = static_cast<int>(patches.front().rows());
  const auto l_r = static_cast<int>(patches.front().cols());
  if (q_r < 1 || q_r > l_r || q_s < 1 || q_s > l_s) throw DiscriminantError("rmlda: projection size out of range");

  MldaState state;
  state.u_r = Eigen::MatrixXd::Identity(l_r, q_r);
  state.u_s = Eigen::MatrixXd::Identity(l_s, q_s);

  // Zero within-class scatter makes the ratio unbounded; a constant offset
  // delta on the projected within trace keeps both half-steps on the same
  // objective B / (W + delta).
  const auto full = spectral_patch_scatter(patches, labels, Eigen::MatrixXd::Identity(l_r, l_r));
  double delta = 0;
  if (full.within.trace() <= 1e-12 * std::max(full.between.trace(), 1e-300)) {
    delta = 1e-6 * std::max(full.between.trace(), 1.0);
    state.regularized = true;
  }
  const auto ratio_of = [](const PatchScatter& s, const Eigen::MatrixXd& u) {
    return projected_trace(s.between, u) / projected_trace(s.within, u);
  };

  double previous = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    // Fix U_r, solve for U_s.
    auto spec = spectral_patch_scatter(patches, labels, state.u_r);
    spec.within.diagonal().array() += delta / q_s;
    {
      Eigen::MatrixXd start = state.u_s;
      try {
        const Eigen::MatrixXd init = orthonormalize(generalized_topk(spec.between, spec.within, q_s).vectors);
        if (ratio_of(spec, init) > ratio_of(spec, start)) start = init;
      } catch (const DiscriminantError&) {
      }
      state.u_s = maximize_trace_ratio(spec.between, spec.within, start, q_s);
    }

    // Fix U_s, solve for U_r.
    auto spat = spatial_patch_scatter(patches, labels, state.u_s);
    spat.within.diagonal().array() += delta / q_r;
    {
      Eigen::MatrixXd start = state.u_r;
      try {
        const Eigen::MatrixXd init = orthonormalize(generalized_topk(spat.between, spat.within, q_r).vectors);
        if (ratio_of(spat, init) > ratio_of(spat, start)) start = init;
      } catch (const DiscriminantError&) {
      }
      state.u_r = maximize_trace_ratio(spat.between, spat.within, start, q_r);
    }

    const auto after = spectral_patch_scatter(patches, labels, state.u_r);
    const double ratio = projected_trace(after.between, state.u_s) /
                         (projected_trace(after.within, state.u_s) + delta);
    state.ratio_history.push_back(ratio);
    state.iterations = it + 1;
    if (std::isfinite(previous) && std::abs(ratio - previous) <= tol * std::max(std::abs(previous), 1e-300)) {
      state.converged = true;
      break;
    }
    previous = ratio;
  }
  return state;
}

}  // namespace flg
