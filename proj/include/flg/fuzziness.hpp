#pragma once

#include "flg/classify.hpp"
#include "flg/data.hpp"

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace flg {

class FuzzinessError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One row of the pool association table.
struct FuzzinessRecord {
  double fuzziness = 0;
  PixelCoord coord;
  int actual = 0;
  int predicted = 0;
  int pool_index = 0;  // position in the pool list

  bool misclassified() const { return actual != predicted; }
};

struct FuzzinessGroups {
  std::vector<FuzzinessRecord> low;   // fuzziness in [0, 0.5]
  std::vector<FuzzinessRecord> high;  // fuzziness in (0.5, 1]
  std::optional<double> q1;           // median of low, empty when low is empty
  std::optional<double> q2;           // median of high
};

/// Binary-entropy fuzziness of one membership row, averaged over classes
/// with base-2 logs so the result lies in [0, 1].
double sample_fuzziness(std::span<const double> row);
double sample_fuzziness(const Eigen::Ref<const Eigen::RowVectorXd>& row);

std::vector<FuzzinessRecord> build_table(const MembershipMatrix& memberships, const std::vector<int>& actual,
                                         const std::vector<PixelCoord>& coords);

/// Median of a list sorted in any order; empty input yields nullopt.
std::optional<double> median(std::vector<double> values);

/// Descending fuzziness, ties by ascending pool index.
void sort_by_fuzziness(std::vector<FuzzinessRecord>& records);

FuzzinessGroups categorize(std::vector<FuzzinessRecord> records);

/// Up to `k` misclassified records from each group in descending fuzziness
/// order, high-group picks first. `high_only` skips the low group.
std::vector<FuzzinessRecord> select_candidates(const FuzzinessGroups& groups, int k, bool high_only = false);

/// Histogram of fuzziness values over [0, 1] with `bins` equal bins.
std::vector<int> fuzziness_histogram(const std::vector<FuzzinessRecord>& records, int bins);

}  // namespace flg
