#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace flg {

class DiscriminantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Samples are columns of an L x n matrix throughout this module; labels are
/// arbitrary positive integers, one per column.

struct ClassMeans {
  Eigen::VectorXd overall;
  std::vector<int> classes;             // distinct labels, ascending
  std::vector<Eigen::VectorXd> means;   // parallel to classes
  std::vector<int> counts;              // parallel to classes
};

ClassMeans class_means(const Eigen::MatrixXd& x, const std::vector<int>& labels);

struct GlobalScatter {
  Eigen::MatrixXd between;  // sum_j N_j (M_j - M)(M_j - M)^T
  Eigen::MatrixXd within;   // sum_j sum_{i in j} (x_i - M_j)(x_i - M_j)^T
  bool single_class = false;
};

GlobalScatter global_scatter(const Eigen::MatrixXd& x, const std::vector<int>& labels);

/// Intrinsic (same-class, k1) and penalty (different-class, k2) kNN graphs,
/// symmetrized by OR. Degrees follow D_ii = sum_j W_ji.
struct LocalGraphs {
  Eigen::MatrixXd w_lw;
  Eigen::MatrixXd w_lb;
  Eigen::VectorXd d_lw;
  Eigen::VectorXd d_lb;
  int k1 = 0;
  int k2 = 0;

  Eigen::MatrixXd laplacian_lw() const { return Eigen::MatrixXd(d_lw.asDiagonal()) - w_lw; }
  Eigen::MatrixXd laplacian_lb() const { return Eigen::MatrixXd(d_lb.asDiagonal()) - w_lb; }
};

LocalGraphs local_graphs(const Eigen::MatrixXd& x, const std::vector<int>& labels, int k1, int k2);

struct LocalScatter {
  Eigen::MatrixXd within;   // X (D_lw - W_lw) X^T
  Eigen::MatrixXd between;  // X (D_lb - W_lb) X^T
};

LocalScatter local_scatter(const Eigen::MatrixXd& x, const LocalGraphs& graphs);

struct ScatterSet {
  Eigen::MatrixXd s_gw, s_gb, s_lw, s_lb;
  LocalGraphs graphs;
};

ScatterSet compute_scatters(const Eigen::MatrixXd& x, const std::vector<int>& labels, int k1, int k2);

/// Leading eigenpairs, eigenvalues descending; vectors are columns.
struct EigenBasis {
  Eigen::MatrixXd vectors;
  Eigen::VectorXd values;
};

/// Flips each column so its largest-magnitude entry is positive.
void fix_signs(Eigen::MatrixXd& vectors);

/// Top-d eigenvectors of the symmetric part of g, orthonormal, sign-fixed.
EigenBasis symmetric_topk(const Eigen::MatrixXd& g, int d);

/// Top-d solutions of A u = lambda (B + eps * trace(B) / L * I) u by Cholesky
/// reduction; vectors are B-orthonormal w.r.t. the regularized B.
EigenBasis generalized_topk(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int d, double eps = 1e-6);

struct DmldaResult {
  double xi = 0;
  EigenBasis basis;  // top-d of s_b - xi * s_w
};

/// Difference-form discriminant step: xi is the largest generalized
/// eigenvalue of (s_b, s_w); the basis maximizes U^T (s_b - xi s_w) U.
/// s_w is regularized with `eps` only when it is not positive definite.
DmldaResult dmlda_step(const Eigen::MatrixXd& s_b, const Eigen::MatrixXd& s_w, int d, double eps = 1e-6);

struct MldaState {
  Eigen::MatrixXd u_r;  // spatial (L_r x q_r)
  Eigen::MatrixXd u_s;  // spectral (L_s x q_s)
  int iterations = 0;
  std::vector<double> ratio_history;
  bool converged = false;
  bool regularized = false;
};

/// Projected 2D scatters of patch matrices (L_s x L_r each).
/// spectral: sum N_j (M_j - M) U_r U_r^T (M_j - M)^T and the within analogue.
/// spatial:  sum N_j (M_j - M)^T U_s U_s^T (M_j - M) and the within analogue.
struct PatchScatter {
  Eigen::MatrixXd between;
  Eigen::MatrixXd within;
};

PatchScatter spectral_patch_scatter(const std::vector<Eigen::MatrixXd>& patches, const std::vector<int>& labels,
                                    const Eigen::MatrixXd& u_r);
PatchScatter spatial_patch_scatter(const std::vector<Eigen::MatrixXd>& patches, const std::vector<int>& labels,
                                   const Eigen::MatrixXd& u_s);

/// tr(U_s^T S_B U_s) / tr(U_s^T S_W U_s) for the given projections.
double mlda_trace_ratio(const std::vector<Eigen::MatrixXd>& patches, const std::vector<int>& labels,
                        const Eigen::MatrixXd& u_r, const Eigen::MatrixXd& u_s);

/// Alternating ratio-based multilinear discriminant analysis.
MldaState rmlda_alternate(const std::vector<Eigen::MatrixXd>& patches, const std::vector<int>& labels, int q_r,
                          int q_s, int max_iter = 20, double tol = 1e-8);

}  // namespace flg
