#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace flg {

class ClassifierError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// m x C row-stochastic class memberships; column j holds class j + 1.
using MembershipMatrix = Eigen::MatrixXd;

enum class Algorithm { knn, elm, mlr, linsvm };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view name);

struct ClassifierConfig {
  Algorithm algorithm = Algorithm::mlr;
  int classes = 0;  // C; labels are 1..C

  // knn
  int k = 5;
  bool distance_weighted = false;

  // elm
  int hidden_nodes = 500;
  double elm_ridge = 1e-6;

  // mlr
  double mlr_l2 = 1e-3;
  int mlr_epochs = 500;
  double mlr_step = 0.1;

  // linsvm
  int svm_epochs = 200;
  double svm_lambda = 1e-2;
};

struct KnnModel {
  Eigen::MatrixXd prototypes;  // features x n
  std::vector<int> labels;
  int k = 5;
  bool distance_weighted = false;
};

struct ElmModel {
  Eigen::MatrixXd input_weights;  // hidden x features
  Eigen::VectorXd hidden_bias;
  Eigen::MatrixXd output_weights;  // hidden x C
};

/// Shared by mlr and linsvm: scores = W^T x + b.
struct LinearModel {
  Eigen::MatrixXd weights;  // features x C
  Eigen::VectorXd bias;     // C
  std::vector<double> loss_history;
};

struct ClassifierModel {
  Algorithm algorithm = Algorithm::mlr;
  int classes = 0;
  int features = 0;
  std::uint64_t seed = 0;
  std::variant<KnnModel, ElmModel, LinearModel> params;
};

/// Trains on the columns of `features` (features x n) with labels in 1..C.
ClassifierModel train(const ClassifierConfig& config, const Eigen::MatrixXd& features,
                      const std::vector<int>& labels, std::uint64_t seed);

/// One membership row per column of `features`.
MembershipMatrix predict_memberships(const ClassifierModel& model, const Eigen::MatrixXd& features);

/// Argmax of each membership row, ties to the smallest class; 1-based.
std::vector<int> argmax_labels(const MembershipMatrix& memberships);
std::vector<int> predict_labels(const ClassifierModel& model, const Eigen::MatrixXd& features);

/// Row-wise softmax with max-shift.
MembershipMatrix softmax_rows(const Eigen::MatrixXd& scores);

}  // namespace flg
