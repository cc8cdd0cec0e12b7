#pragma once

#include "flg/discriminant.hpp"
#include "flg/fuzziness.hpp"

#include <stdexcept>
#include <vector>

namespace flg {

class ObjectiveError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Trade-off weights, each in [0, 1].
struct TradeoffParams {
  double omega = 0.5;   // between vs. within
  double lambda = 0.5;  // global vs. local within-class
  double psi = 0.5;     // global vs. local between-class

  void validate() const;
};

struct ObjectiveMatrix {
  Eigen::MatrixXd g;
  TradeoffParams params;
};

/// lambda * s_gw + (1 - lambda) * s_lw
Eigen::MatrixXd combine_within(const Eigen::MatrixXd& s_gw, const Eigen::MatrixXd& s_lw, double lambda);
/// psi * s_gb + (1 - psi) * s_lb
Eigen::MatrixXd combine_between(const Eigen::MatrixXd& s_gb, const Eigen::MatrixXd& s_lb, double psi);

/// g = omega * S_B - (1 - omega) * S_W, symmetrized.
ObjectiveMatrix build_objective(const ScatterSet& scatters, const TradeoffParams& params);

EigenBasis discriminant_projection(const ObjectiveMatrix& objective, int d);

struct HeterogeneousSelection {
  std::vector<int> pool_indices;  // in selection order
  double min_pairwise_distance = 0;  // in the projected space; 0 for fewer than 2 picks
};

/// Greedy farthest-point selection in the projected space z = U^T (x - mean),
/// seeded with the first (highest-fuzziness) candidate. `spectra` holds one
/// column per candidate, in candidate order.
HeterogeneousSelection select_heterogeneous(const std::vector<FuzzinessRecord>& candidates,
                                            const Eigen::MatrixXd& spectra, const Eigen::MatrixXd& projection,
                                            int h);

}  // namespace flg
