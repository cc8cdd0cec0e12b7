#include "flg/fuzziness.hpp"

#include <algorithm>
#include <cmath>

namespace flg {
namespace {

double entropy_term(double mu) {
  // 0 log 0 = 0
  double t = 0;
  if (mu > 0) t += mu * std::log2(mu);
  if (mu < 1) t += (1 - mu) * std::log2(1 - mu);
  return t;
}

}  // namespace

double sample_fuzziness(std::span<const double> row) {
  if (row.empty()) throw FuzzinessError("sample_fuzziness: empty row");
  double sum = 0;
  for (double mu : row) {
    if (!(mu >= 0.0 && mu <= 1.0)) throw FuzzinessError("sample_fuzziness: membership outside [0, 1]");
    sum += entropy_term(mu);
  }
  return std::clamp(0.0 - sum / static_cast<double>(row.size()), 0.0, 1.0);
}

double sample_fuzziness(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  const Eigen::RowVectorXd copy = row;
  return sample_fuzziness(std::span<const double>(copy.data(), static_cast<std::size_t>(copy.size())));
}

std::vector<FuzzinessRecord> build_table(const MembershipMatrix& memberships, const std::vector<int>& actual,
                                         const std::vector<PixelCoord>& coords) {
  const auto m = static_cast<std::size_t>(memberships.rows());
  if (actual.size() != m || coords.size() != m) throw FuzzinessError("build_table: length mismatch");
  const auto predicted = argmax_labels(memberships);
  std::vector<FuzzinessRecord> table(m);
  for (std::size_t i = 0; i < m; ++i) {
    table[i] = {sample_fuzziness(memberships.row(static_cast<Eigen::Index>(i))), coords[i], actual[i],
                predicted[i], static_cast<int>(i)};
  }
  return table;
}

std::optional<double> median(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size();
  if (m % 2 == 1) return values[(m + 1) / 2 - 1];
  return 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

void sort_by_fuzziness(std::vector<FuzzinessRecord>& records) {
  std::sort(records.begin(), records.end(), [](const FuzzinessRecord& a, const FuzzinessRecord& b) {
    if (a.fuzziness != b.fuzziness) return a.fuzziness > b.fuzziness;
    return a.pool_index < b.pool_index;
  });
}

FuzzinessGroups categorize(std::vector<FuzzinessRecord> records) {
  FuzzinessGroups g;
  for (auto& r : records) (r.fuzziness <= 0.5 ? g.low : g.high).push_back(r);
  sort_by_fuzziness(g.low);
  sort_by_fuzziness(g.high);
  auto values = [](const std::vector<FuzzinessRecord>& group) {
    std::vector<double> v;
    v.reserve(group.size());
    for (const auto& r : group) v.push_back(r.fuzziness);
    return v;
  };
  g.q1 = median(values(g.low));
  g.q2 = median(values(g.high));
  return g;
}

std::vector<FuzzinessRecord> select_candidates(const FuzzinessGroups& groups, int k, bool high_only) {
  if (k < 1) throw FuzzinessError("select_candidates: K must be positive");
  std::vector<FuzzinessRecord> out;
  auto take = [&](const std::vector<FuzzinessRecord>& group) {
    int taken = 0;
    for (const auto& r : group) {
      if (taken == k) break;
      if (r.misclassified()) {
        out.push_back(r);
        ++taken;
      }
    }
  };
  take(groups.high);
  if (!high_only) take(groups.low);
  return out;
}

std::vector<int> fuzziness_histogram(const std::vector<FuzzinessRecord>& records, int bins) {
  if (bins < 1) throw FuzzinessError("fuzziness_histogram: bins must be positive");
  std::vector<int> counts(static_cast<std::size_t>(bins), 0);
  for (const auto& r : records) {
    const int b = std::min(bins - 1, static_cast<int>(r.fuzziness * bins));
    ++counts[static_cast<std::size_t>(b)];
  }
  return counts;
}

}  // namespace flg
