#include "flg/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace flg {
namespace {

void check_training_set(const ClassifierConfig& config, const Eigen::MatrixXd& x, const std::vector<int>& y) {
  if (config.classes < 2) throw ClassifierError("train: class count must be at least 2");
  if (x.cols() != static_cast<Eigen::Index>(y.size())) throw ClassifierError("train: label count mismatch");
  if (x.cols() == 0) throw ClassifierError("train: empty training set");
  if (!x.allFinite()) throw ClassifierError("train: NaN or infinite features");
  std::set<int> seen;
  for (int label : y) {
    if (label < 1 || label > config.classes) throw ClassifierError("train: label out of range");
    seen.insert(label);
  }
  if (seen.size() < 2) throw ClassifierError("train: single-class training set");
}

Eigen::MatrixXd one_hot(const std::vector<int>& y, int classes) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(y.size()), classes);
  for (std::size_t i = 0; i < y.size(); ++i) t(static_cast<Eigen::Index>(i), y[i] - 1) = 1.0;
  return t;
}

KnnModel train_knn(const ClassifierConfig& c, const Eigen::MatrixXd& x, const std::vector<int>& y) {
  if (c.k < 1) throw ClassifierError("knn: k must be positive");
  return {x, y, c.k, c.distance_weighted};
}

Eigen::MatrixXd elm_hidden(const ElmModel& m, const Eigen::MatrixXd& x) {
  // n x hidden sigmoid activations
  Eigen::MatrixXd pre = (m.input_weights * x).colwise() + m.hidden_bias;
  return (1.0 / (1.0 + (-pre.array()).exp())).matrix().transpose();
}

ElmModel train_elm(const ClassifierConfig& c, const Eigen::MatrixXd& x, const std::vector<int>& y,
                   std::uint64_t seed) {
  if (c.hidden_nodes < 1) throw ClassifierError("elm: hidden node count must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ElmModel m;
  m.input_weights.resize(c.hidden_nodes, x.rows());
  for (Eigen::Index i = 0; i < m.input_weights.size(); ++i) m.input_weights.data()[i] = u(rng);
  m.hidden_bias.resize(c.hidden_nodes);
  for (auto& b : m.hidden_bias) b = u(rng);

  const Eigen::MatrixXd h = elm_hidden(m, x);
  Eigen::MatrixXd gram = h.transpose() * h;
  gram.diagonal().array() += c.elm_ridge;
  m.output_weights = gram.ldlt().solve(h.transpose() * one_hot(y, c.classes));
  return m;
}

struct MlrObjective {
  const Eigen::MatrixXd& x;
  const Eigen::MatrixXd& targets;  // n x C
  double l2;

  double loss(const LinearModel& m) const {
    const Eigen::MatrixXd p = softmax_rows((m.weights.transpose() * x).colwise() + m.bias).transpose();
    const double n = static_cast<double>(x.cols());
    double nll = 0;
    for (Eigen::Index i = 0; i < targets.rows(); ++i)
      for (Eigen::Index j = 0; j < targets.cols(); ++j)
        if (targets(i, j) > 0) nll -= std::log(std::max(p(j, i), 1e-300));
    return nll / n + 0.5 * l2 * m.weights.squaredNorm();
  }

  void gradient(const LinearModel& m, Eigen::MatrixXd& gw, Eigen::VectorXd& gb) const {
    const double n = static_cast<double>(x.cols());
    const Eigen::MatrixXd p = softmax_rows((m.weights.transpose() * x).colwise() + m.bias);  // n x C
    const Eigen::MatrixXd residual = p - targets;
    gw = x * residual / n + l2 * m.weights;
    gb = residual.colwise().sum().transpose() / n;
  }
};

LinearModel train_mlr(const ClassifierConfig& c, const Eigen::MatrixXd& x, const std::vector<int>& y) {
  const Eigen::MatrixXd targets = one_hot(y, c.classes);
  const MlrObjective obj{x, targets, c.mlr_l2};
  LinearModel m{Eigen::MatrixXd::Zero(x.rows(), c.classes), Eigen::VectorXd::Zero(c.classes), {}};
  double step = c.mlr_step;
  double current = obj.loss(m);
  m.loss_history.push_back(current);
  Eigen::MatrixXd gw;
  Eigen::VectorXd gb;
  for (int epoch = 0; epoch < c.mlr_epochs; ++epoch) {
    obj.gradient(m, gw, gb);
    // Halve the step until the loss does not increase; reject increasing steps.
    for (int tries = 0; tries < 40; ++tries) {
      LinearModel next{m.weights - step * gw, m.bias - step * gb, {}};
      const double l = obj.loss(next);
      if (l <= current) {
        m.weights = std::move(next.weights);
        m.bias = std::move(next.bias);
        current = l;
        break;
      }
      step *= 0.5;
    }
    m.loss_history.push_back(current);
  }
  return m;
}

LinearModel train_linsvm(const ClassifierConfig& c, const Eigen::MatrixXd& x, const std::vector<int>& y,
                         std::uint64_t seed) {
  const auto n = static_cast<int>(x.cols());
  LinearModel m{Eigen::MatrixXd::Zero(x.rows(), c.classes), Eigen::VectorXd::Zero(c.classes), {}};
  std::mt19937_64 rng(seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<int>> epochs(c.svm_epochs);
  for (auto& e : epochs) {
    std::shuffle(order.begin(), order.end(), rng);
    e = order;
  }
  // Pegasos-style SGD per one-vs-rest problem; the shuffles are drawn once
  // so every class sees the same sample order.
  for (int cls = 0; cls < c.classes; ++cls) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(x.rows());
    double b = 0;
    long t = 0;
    for (const auto& e : epochs) {
      for (int i : e) {
        ++t;
        const double eta = 1.0 / (c.svm_lambda * static_cast<double>(t));
        const double target = (y[i] == cls + 1) ? 1.0 : -1.0;
        const double margin = target * (w.dot(x.col(i)) + b);
        w *= (1.0 - eta * c.svm_lambda);
        if (margin < 1.0) {
          w += eta * target * x.col(i);
          b += eta * target;
        }
      }
    }
    m.weights.col(cls) = w;
    m.bias[cls] = b;
  }
  return m;
}

MembershipMatrix knn_memberships(const ClassifierModel& model, const KnnModel& knn, const Eigen::MatrixXd& x) {
  const auto n = static_cast<int>(knn.prototypes.cols());
  const int k = std::min(knn.k, n);
  MembershipMatrix out = MembershipMatrix::Zero(x.cols(), model.classes);
  const Eigen::VectorXd proto_norms = knn.prototypes.colwise().squaredNorm().transpose();
  std::vector<std::pair<double, int>> dist(n);
  for (Eigen::Index q = 0; q < x.cols(); ++q) {
    const Eigen::VectorXd d2 = proto_norms - 2.0 * knn.prototypes.transpose() * x.col(q);
    for (int i = 0; i < n; ++i) dist[i] = {d2[i], i};
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    double total = 0;
    for (int i = 0; i < k; ++i) {
      double w = 1.0;
      if (knn.distance_weighted) {
        const double d = std::sqrt(std::max(0.0, dist[i].first + x.col(q).squaredNorm()));
        w = 1.0 / (d + 1e-12);
      }
      out(q, knn.labels[dist[i].second] - 1) += w;
      total += w;
    }
    out.row(q) /= total;
  }
  return out;
}

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::knn: return "knn";
    case Algorithm::elm: return "elm";
    case Algorithm::mlr: return "mlr";
    case Algorithm::linsvm: return "linsvm";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  for (auto a : {Algorithm::knn, Algorithm::elm, Algorithm::mlr, Algorithm::linsvm})
    if (to_string(a) == name) return a;
  throw ClassifierError("unknown classifier '" + std::string(name) + "'");
}

MembershipMatrix softmax_rows(const Eigen::MatrixXd& scores) {
  // scores: C x m, result m x C
  MembershipMatrix out(scores.cols(), scores.rows());
  for (Eigen::Index i = 0; i < scores.cols(); ++i) {
    const Eigen::ArrayXd e = (scores.col(i).array() - scores.col(i).maxCoeff()).exp();
    out.row(i) = (e / e.sum()).matrix().transpose();
  }
  return out;
}

ClassifierModel train(const ClassifierConfig& config, const Eigen::MatrixXd& features,
                      const std::vector<int>& labels, std::uint64_t seed) {
  check_training_set(config, features, labels);
  ClassifierModel model;
  model.algorithm = config.algorithm;
  model.classes = config.classes;
  model.features = static_cast<int>(features.rows());
  model.seed = seed;
  switch (config.algorithm) {
    case Algorithm::knn: model.params = train_knn(config, features, labels); break;
    case Algorithm::elm: model.params = train_elm(config, features, labels, seed); break;
    case Algorithm::mlr: model.params = train_mlr(config, features, labels); break;
    case Algorithm::linsvm: model.params = train_linsvm(config, features, labels, seed); break;
  }
  return model;
}

MembershipMatrix predict_memberships(const ClassifierModel& model, const Eigen::MatrixXd& features) {
  if (features.rows() != model.features) throw ClassifierError("predict: feature dimension mismatch");
  if (const auto* knn = std::get_if<KnnModel>(&model.params)) return knn_memberships(model, *knn, features);
  if (const auto* elm = std::get_if<ElmModel>(&model.params))
    return softmax_rows((elm_hidden(*elm, features) * elm->output_weights).transpose());
  const auto& lin = std::get<LinearModel>(model.params);
  return softmax_rows((lin.weights.transpose() * features).colwise() + lin.bias);
}

std::vector<int> argmax_labels(const MembershipMatrix& memberships) {
  std::vector<int> out(static_cast<std::size_t>(memberships.rows()));
  for (Eigen::Index i = 0; i < memberships.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < memberships.cols(); ++j)
      if (memberships(i, j) > memberships(i, best)) best = j;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best) + 1;
  }
  return out;
}

std::vector<int> predict_labels(const ClassifierModel& model, const Eigen::MatrixXd& features) {
  return argmax_labels(predict_memberships(model, features));
}

}  // namespace flg
