#include "evd/evaluation.hpp"

#include <cmath>
#include <stdexcept>

namespace evd {

double average_utility(const std::vector<Decision>& decisions,
                       const std::vector<int>& labels,
                       const ExtendedUtilityMatrix& eum) {
  if (decisions.size() != labels.size()) {
    throw std::invalid_argument("decisions/labels size mismatch");
  }
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    if (labels[i] < 0) continue;
    const auto row = eum.catalog()->index_of(decisions[i].act.members);
    if (!row) throw std::invalid_argument("decision act not in catalog");
    total += eum.value(*row, static_cast<std::size_t>(labels[i]));
    ++counted;
  }
  if (counted == 0) throw std::invalid_argument("no labeled samples");
  return total / static_cast<double>(counted);
}

double average_cardinality(const std::vector<Decision>& decisions) {
  if (decisions.empty()) throw std::invalid_argument("no decisions");
  double total = 0.0;
  for (const Decision& d : decisions) total += d.act.cardinality();
  return total / static_cast<double>(decisions.size());
}

double omega_rate(const std::vector<Decision>& decisions, const Frame& frame) {
  if (decisions.empty()) return 0.0;
  std::size_t hits = 0;
  for (const Decision& d : decisions) {
    if (d.act.members == frame.omega()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(decisions.size());
}

McNemarResult mcnemar(std::size_t b, std::size_t c) {
  McNemarResult result;
  result.b = b;
  result.c = c;
  if (b + c == 0) {
    result.statistic = 0.0;
    result.p_value = 1.0;
    return result;
  }
  const double diff =
      std::abs(static_cast<double>(b) - static_cast<double>(c));
  result.statistic = (diff - 1.0) * (diff - 1.0) /
                     static_cast<double>(b + c);
  // Chi-square survival with 1 dof: P(Z^2 > x) = erfc(sqrt(x/2)).
  result.p_value = std::erfc(std::sqrt(result.statistic / 2.0));
  return result;
}

McNemarResult mcnemar_paired(const std::vector<bool>& first_correct,
                             const std::vector<bool>& second_correct) {
  if (first_correct.size() != second_correct.size()) {
    throw std::invalid_argument("paired correctness vectors differ in size");
  }
  std::size_t b = 0, c = 0;
  for (std::size_t i = 0; i < first_correct.size(); ++i) {
    if (first_correct[i] && !second_correct[i]) ++b;
    if (!first_correct[i] && second_correct[i]) ++c;
  }
  return mcnemar(b, c);
}

bool decision_correct(const Decision& decision, int label) {
  return label >= 0 &&
         subset_contains(decision.act.members, static_cast<std::size_t>(label));
}

EvalReport evaluate_decisions(const std::vector<Decision>& decisions,
                              const std::vector<int>& labels,
                              const ExtendedUtilityMatrix& eum) {
  if (decisions.size() != labels.size()) {
    throw std::invalid_argument("decisions/labels size mismatch");
  }
  const Frame& frame = *eum.catalog()->frame();

  EvalReport report;
  std::vector<Decision> inlier_decisions, outlier_decisions;
  std::vector<int> inlier_labels;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    ++report.act_counts[frame.subset_name(decisions[i].act.members)];
    if (labels[i] < 0) {
      outlier_decisions.push_back(decisions[i]);
    } else {
      inlier_decisions.push_back(decisions[i]);
      inlier_labels.push_back(labels[i]);
    }
  }
  report.inliers = inlier_decisions.size();
  report.outliers = outlier_decisions.size();
  if (!inlier_decisions.empty()) {
    report.averaged_utility =
        average_utility(inlier_decisions, inlier_labels, eum);
    report.averaged_cardinality = average_cardinality(inlier_decisions);
    report.omega_rate_inliers = omega_rate(inlier_decisions, frame);
  }
  report.omega_rate_outliers = omega_rate(outlier_decisions, frame);
  return report;
}

}  // namespace evd
