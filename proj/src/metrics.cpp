#include "flg/metrics.hpp"

namespace flg {

ConfusionMatrix::ConfusionMatrix(int classes) {
  if (classes < 1) throw MetricsError("confusion matrix needs at least one class");
  counts_ = Eigen::MatrixXi::Zero(classes, classes);
}

ConfusionMatrix::ConfusionMatrix(Eigen::MatrixXi counts) : counts_(std::move(counts)) {
  if (counts_.rows() != counts_.cols() || counts_.rows() < 1) throw MetricsError("confusion matrix must be square");
  if ((counts_.array() < 0).any()) throw MetricsError("confusion counts must be non-negative");
}

void ConfusionMatrix::add(int actual, int predicted) {
  if (actual < 1 || actual > classes() || predicted < 1 || predicted > classes())
    throw MetricsError("label out of range");
  ++counts_(actual - 1, predicted - 1);
}

long ConfusionMatrix::tp(int c) const { return counts_(c - 1, c - 1); }
long ConfusionMatrix::fp(int c) const { return counts_.col(c - 1).cast<long>().sum() - tp(c); }
long ConfusionMatrix::fn(int c) const { return counts_.row(c - 1).cast<long>().sum() - tp(c); }
long ConfusionMatrix::tn(int c) const { return total() - tp(c) - fp(c) - fn(c); }

ConfusionMatrix confusion(const std::vector<int>& actual, const std::vector<int>& predicted, int classes) {
  if (actual.size() != predicted.size()) throw MetricsError("confusion: length mismatch");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < actual.size(); ++i) cm.add(actual[i], predicted[i]);
  return cm;
}

double overall_accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw MetricsError("overall_accuracy: empty confusion matrix");
  return static_cast<double>(cm.counts().trace()) / static_cast<double>(cm.total());
}

double average_accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw MetricsError("average_accuracy: empty confusion matrix");
  double sum = 0;
  int present = 0;
  for (int c = 1; c <= cm.classes(); ++c) {
    const long support = cm.tp(c) + cm.fn(c);
    if (support == 0) continue;
    sum += static_cast<double>(cm.tp(c)) / static_cast<double>(support);
    ++present;
  }
  return sum / present;
}

double kappa(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw MetricsError("kappa: empty confusion matrix");
  const double total = static_cast<double>(cm.total());
  const Eigen::VectorXd rows = cm.counts().cast<double>().rowwise().sum();
  const Eigen::VectorXd cols = cm.counts().cast<double>().colwise().sum().transpose();
  const double po = cm.counts().cast<double>().trace() / total;
  const double pe = rows.dot(cols) / (total * total);
  if (pe == 1.0) return 0.0;
  return (po - pe) / (1.0 - pe);
}

double binary_kappa(long tp, long fn, long fp, long tn) {
  const double total = static_cast<double>(tp + fn + fp + tn);
  if (total == 0) throw MetricsError("binary_kappa: empty table");
  const double po = static_cast<double>(tp + tn) / total;
  const double p_yes = (static_cast<double>(tp + fn) / total) * (static_cast<double>(tp + fp) / total);
  const double p_no = (static_cast<double>(fp + tn) / total) * (static_cast<double>(fn + tn) / total);
  const double pe = p_yes + p_no;
  if (pe == 1.0) return 0.0;
  return (po - pe) / (1.0 - pe);
}

Prf prf(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw MetricsError("prf: empty confusion matrix");
  Prf r;
  for (int c = 1; c <= cm.classes(); ++c) {
    const long pden = cm.tp(c) + cm.fp(c), rden = cm.tp(c) + cm.fn(c);
    if (pden > 0) r.precision += static_cast<double>(cm.tp(c)) / static_cast<double>(pden);
    if (rden > 0) r.recall += static_cast<double>(cm.tp(c)) / static_cast<double>(rden);
  }
  r.precision /= cm.classes();
  r.recall /= cm.classes();
  const double denom = r.precision + r.recall;
  r.f1 = denom > 0 ? 2.0 * r.precision * r.recall / denom : 0.0;
  return r;
}

MetricSet evaluate(const std::vector<int>& actual, const std::vector<int>& predicted, int classes) {
  const auto cm = confusion(actual, predicted, classes);
  const auto p = prf(cm);
  return {overall_accuracy(cm), average_accuracy(cm), kappa(cm), p.precision, p.recall, p.f1};
}

}  // namespace flg
