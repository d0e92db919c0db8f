#include "evd/decision.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace evd {

ExpectedUtilityVector expected_utilities(const MassVector& m,
                                         const ExtendedUtilityMatrix& eum,
                                         double nu) {
  if (!(*m.frame == *eum.catalog()->frame())) {
    throw std::invalid_argument("mass vector frame != utility matrix frame");
  }
  ExpectedUtilityVector eu{eum.catalog(), {}, nu};
  eu.values.reserve(eum.catalog()->size());
  for (std::size_t a = 0; a < eum.catalog()->size(); ++a) {
    eu.values.push_back(hurwicz_expectation(m, eum.act_row(a), nu));
  }
  return eu;
}

Decision decide(const ExpectedUtilityVector& eu) {
  if (!eu.catalog || eu.values.empty()) {
    throw std::invalid_argument("empty expected-utility vector");
  }
  // The catalog is sorted in tie-preference order, so keeping the first
  // strict maximum implements the tie rule.
  std::size_t best = 0;
  for (std::size_t i = 1; i < eu.values.size(); ++i) {
    if (eu.values[i] > eu.values[best]) best = i;
  }
  return Decision{eu.catalog->act(best), eu.values[best]};
}

std::vector<double> singleton_expected_utilities(
    const MassVector& m, std::span<const double> original_utilities,
    double nu) {
  const std::size_t classes = m.frame->size();
  if (original_utilities.size() != classes * classes) {
    throw std::invalid_argument("original utility matrix must be M x M");
  }
  std::vector<double> eu(classes);
  for (std::size_t k = 0; k < classes; ++k) {
    eu[k] = hurwicz_expectation(
        m, original_utilities.subspan(k * classes, classes), nu);
  }
  return eu;
}

std::vector<double> decision_backward(const MassVector& m,
                                      std::span<const double> original_utilities,
                                      double nu,
                                      std::span<const double> dL_dE) {
  const std::size_t classes = m.frame->size();
  if (original_utilities.size() != classes * classes) {
    throw std::invalid_argument("original utility matrix must be M x M");
  }
  if (dL_dE.size() != classes) {
    throw std::invalid_argument("dL_dE must have one entry per singleton act");
  }
  // E(f_k) = sum_j m_j u_kj + m(Omega) (nu min_j u_kj + (1-nu) max_j u_kj)
  // is linear in m, so the Jacobian is the utility table itself.
  std::vector<double> dm(classes + 1, 0.0);
  for (std::size_t k = 0; k < classes; ++k) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < classes; ++j) {
      const double u = original_utilities[k * classes + j];
      dm[j] += dL_dE[k] * u;
      lo = std::min(lo, u);
      hi = std::max(hi, u);
    }
    dm[classes] += dL_dE[k] * (nu * lo + (1.0 - nu) * hi);
  }
  return dm;
}

Decision probabilistic_baseline_decide(std::span<const double> p,
                                       const ExtendedUtilityMatrix& eum) {
  const std::size_t classes = eum.classes();
  if (p.size() != classes) {
    throw std::invalid_argument("probability vector size != frame size");
  }
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw std::invalid_argument("negative probability");
    total += v;
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw std::invalid_argument("probabilities do not sum to one");
  }

  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < eum.catalog()->size(); ++a) {
    double value = 0.0;
    for (std::size_t k = 0; k < classes; ++k) value += p[k] * eum.value(a, k);
    if (value > best_value) {
      best_value = value;
      best = a;
    }
  }
  return Decision{eum.catalog()->act(best), best_value};
}

void write_expected_utilities_csv(const ExpectedUtilityVector& eu,
                                  std::ostream& out) {
  const Frame& frame = *eu.catalog->frame();
  out << "act,expected_utility\n";
  char buf[32];
  for (std::size_t i = 0; i < eu.values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", eu.values[i]);
    out << frame.subset_name(eu.catalog->act(i).members) << ',' << buf << '\n';
  }
}

}  // namespace evd
