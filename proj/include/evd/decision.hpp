#pragma once

#include <span>
#include <vector>

#include "evd/mass.hpp"
#include "evd/utility.hpp"

namespace evd {

// Hurwicz expected utility of every act in the catalog, for one mass vector.
struct ExpectedUtilityVector {
  CatalogPtr catalog;
  std::vector<double> values;
  double nu = 0.0;
};

struct Decision {
  Act act;
  double expected_utility = 0.0;
};

ExpectedUtilityVector expected_utilities(const MassVector& m,
                                         const ExtendedUtilityMatrix& eum,
                                         double nu);

// argmax over the catalog; exact ties go to the smaller cardinality, then
// lexicographic act (catalog order), which favors precise assignment.
Decision decide(const ExpectedUtilityVector& eu);

// Expected utilities of the M singleton acts only (the loss path); uses
// the original M x M utility matrix directly.
std::vector<double> singleton_expected_utilities(
    const MassVector& m, std::span<const double> original_utilities,
    double nu);

// Exact gradient of the singleton expected utilities w.r.t. the mass
// vector: returns dL/dm as M singleton entries followed by dL/dm(Omega).
std::vector<double> decision_backward(const MassVector& m,
                                      std::span<const double> original_utilities,
                                      double nu, std::span<const double> dL_dE);

// Baseline strategy for probabilistic classifiers: maximize
// sum_k p(k) * u-hat_{A,k} with the same tie-breaking as decide().
Decision probabilistic_baseline_decide(std::span<const double> p,
                                       const ExtendedUtilityMatrix& eum);

void write_expected_utilities_csv(const ExpectedUtilityVector& eu,
                                  std::ostream& out);

}  // namespace evd
