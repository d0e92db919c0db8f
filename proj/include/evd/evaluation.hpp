#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "evd/decision.hpp"

namespace evd {

// Set-valued classification metrics over one evaluated dataset.
struct EvalReport {
  double averaged_utility = 0.0;      // over labeled samples
  double averaged_cardinality = 0.0;  // over labeled samples
  double omega_rate_inliers = 0.0;
  double omega_rate_outliers = 0.0;
  std::size_t inliers = 0;
  std::size_t outliers = 0;
  std::map<std::string, std::size_t> act_counts;  // all samples
};

// Mean realized utility u-hat_{A(i), y_i}; decisions paired with in-frame
// labels only.
double average_utility(const std::vector<Decision>& decisions,
                       const std::vector<int>& labels,
                       const ExtendedUtilityMatrix& eum);

double average_cardinality(const std::vector<Decision>& decisions);

// Fraction of decisions equal to the whole frame.
double omega_rate(const std::vector<Decision>& decisions, const Frame& frame);

struct McNemarResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t b = 0;  // first right, second wrong
  std::size_t c = 0;  // first wrong, second right
};

// Continuity-corrected McNemar test, chi-square with 1 dof. b + c = 0
// yields p = 1.
McNemarResult mcnemar(std::size_t b, std::size_t c);
McNemarResult mcnemar_paired(const std::vector<bool>& first_correct,
                             const std::vector<bool>& second_correct);

// A set-valued decision is correct iff the true label is in the set.
bool decision_correct(const Decision& decision, int label);

// Assembles the full report from decisions over a mixed inlier/outlier
// dataset (labels use -1 for outliers).
EvalReport evaluate_decisions(const std::vector<Decision>& decisions,
                              const std::vector<int>& labels,
                              const ExtendedUtilityMatrix& eum);

}  // namespace evd
