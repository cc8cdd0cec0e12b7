#include "flg/objective.hpp"

#include <algorithm>
#include <limits>

namespace flg {
namespace {

void check_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) throw ObjectiveError(std::string(name) + " must lie in [0, 1]");
}

void check_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ObjectiveError("scatter shapes differ");
}

}  // namespace

void TradeoffParams::validate() const {
  check_unit(omega, "omega");
  check_unit(lambda, "lambda");
  check_unit(psi, "psi");
}

Eigen::MatrixXd combine_within(const Eigen::MatrixXd& s_gw, const Eigen::MatrixXd& s_lw, double lambda) {
  check_unit(lambda, "lambda");
  check_same_shape(s_gw, s_lw);
  if (lambda == 1.0) return s_gw;
  if (lambda == 0.0) return s_lw;
  return lambda * s_gw + (1.0 - lambda) * s_lw;
}

Eigen::MatrixXd combine_between(const Eigen::MatrixXd& s_gb, const Eigen::MatrixXd& s_lb, double psi) {
  check_unit(psi, "psi");
  check_same_shape(s_gb, s_lb);
  if (psi == 1.0) return s_gb;
  if (psi == 0.0) return s_lb;
  return psi * s_gb + (1.0 - psi) * s_lb;
}

ObjectiveMatrix build_objective(const ScatterSet& scatters, const TradeoffParams& params) {
  params.validate();
  const Eigen::MatrixXd s_w = combine_within(scatters.s_gw, scatters.s_lw, params.lambda);
  const Eigen::MatrixXd s_b = combine_between(scatters.s_gb, scatters.s_lb, params.psi);
  check_same_shape(s_w, s_b);
  Eigen::MatrixXd g;
  if (params.omega == 1.0) {
    g = s_b;
  } else if (params.omega == 0.0) {
    g = -s_w;
  } else {
    g = params.omega * s_b - (1.0 - params.omega) * s_w;
  }
  return {0.5 * (g + g.transpose()), params};
}

EigenBasis discriminant_projection(const ObjectiveMatrix& objective, int d) {
  return symmetric_topk(objective.g, d);
}

HeterogeneousSelection select_heterogeneous(const std::vector<FuzzinessRecord>& candidates,
                                            const Eigen::MatrixXd& spectra, const Eigen::MatrixXd& projection,
                                            int h) {
  if (candidates.empty()) throw ObjectiveError("select_heterogeneous: empty candidate list");
  if (h < 1) throw ObjectiveError("select_heterogeneous: h must be positive");
  if (spectra.cols() != static_cast<Eigen::Index>(candidates.size()))
    throw ObjectiveError("select_heterogeneous: one spectrum per candidate required");
  if (projection.rows() != spectra.rows()) throw ObjectiveError("select_heterogeneous: projection dimension mismatch");

  const auto n = static_cast<int>(candidates.size());
  const Eigen::MatrixXd centered = spectra.colwise() - spectra.rowwise().mean();
  const Eigen::MatrixXd z = projection.transpose() * centered;

  // Candidate a precedes b on equal keys when its pool index is smaller.
  const auto earlier = [&](int a, int b) { return candidates[a].pool_index < candidates[b].pool_index; };

  int seed = 0;
  for (int i = 1; i < n; ++i) {
    const double fi = candidates[i].fuzziness, fs = candidates[seed].fuzziness;
    if (fi > fs || (fi == fs && earlier(i, seed))) seed = i;
  }

  HeterogeneousSelection out;
  const int picks = std::min(h, n);
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  std::vector<double> nearest(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  int current = seed;
  double min_pair = std::numeric_limits<double>::infinity();
  for (int step = 0; step < picks; ++step) {
    if (step > 0) min_pair = std::min(min_pair, nearest[current]);
    taken[current] = true;
    out.pool_indices.push_back(candidates[current].pool_index);
    for (int i = 0; i < n; ++i)
      if (!taken[i]) nearest[i] = std::min(nearest[i], (z.col(i) - z.col(current)).norm());
    int best = -1;
    for (int i = 0; i < n; ++i) {
      if (taken[i]) continue;
      if (best < 0 || nearest[i] > nearest[best] || (nearest[i] == nearest[best] && earlier(i, best))) best = i;
    }
    current = best;
  }
  out.min_pairwise_distance = picks >= 2 ? min_pair : 0.0;
  return out;
}

}  // namespace flg
