#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace flg {

class MetricsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rows are actual classes, columns predicted; class c is index c - 1.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int classes);
  explicit ConfusionMatrix(Eigen::MatrixXi counts);

  int classes() const { return static_cast<int>(counts_.rows()); }
  long total() const { return counts_.cast<long>().sum(); }
  const Eigen::MatrixXi& counts() const { return counts_; }
  void add(int actual, int predicted);

  long tp(int c) const;
  long fp(int c) const;
  long fn(int c) const;
  long tn(int c) const;

 private:
  Eigen::MatrixXi counts_;
};

ConfusionMatrix confusion(const std::vector<int>& actual, const std::vector<int>& predicted, int classes);

/// trace / total
double overall_accuracy(const ConfusionMatrix& cm);
/// Mean per-class recall over classes that occur in `actual`.
double average_accuracy(const ConfusionMatrix& cm);
double kappa(const ConfusionMatrix& cm);
/// Two-class kappa from TP/FN/FP/TN with class 1 as the positive class.
double binary_kappa(long tp, long fn, long fp, long tn);

struct Prf {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

/// Macro-averaged; classes with a zero denominator contribute 0.
Prf prf(const ConfusionMatrix& cm);

struct MetricSet {
  double oa = 0, aa = 0, kappa = 0, precision = 0, recall = 0, f1 = 0;
};

MetricSet evaluate(const std::vector<int>& actual, const std::vector<int>& predicted, int classes);

}  // namespace flg
