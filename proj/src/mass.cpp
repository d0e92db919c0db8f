#include "evd/mass.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "evd/errors.hpp"

namespace evd {

namespace {

void check_frame(const FramePtr& frame) {
  if (!frame) throw std::invalid_argument("null frame");
}

}  // namespace

double MassVector::sum() const {
  return std::accumulate(singletons.begin(), singletons.end(), omega);
}

GeneralMassFunction make_mass(FramePtr frame,
                              std::map<SubsetMask, double> focal) {
  check_frame(frame);
  double total = 0.0;
  for (const auto& [subset, mass] : focal) {
    if (subset == 0) throw std::invalid_argument("mass on the empty set");
    if ((subset & ~frame->omega()) != 0) {
      throw std::invalid_argument("focal set outside the frame");
    }
    if (!(mass >= 0.0)) throw std::invalid_argument("negative mass");
    total += mass;
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw std::invalid_argument("masses do not sum to one");
  }
  return GeneralMassFunction{std::move(frame), std::move(focal)};
}

MassVector make_mass_vector(FramePtr frame, std::vector<double> singletons,
                            double omega) {
  check_frame(frame);
  if (singletons.size() != frame->size()) {
    throw std::invalid_argument("singleton mass count != frame size");
  }
  MassVector m{std::move(frame), std::move(singletons), omega};
  for (double v : m.singletons) {
    if (!(v >= 0.0)) throw std::invalid_argument("negative mass");
  }
  if (!(omega >= 0.0)) throw std::invalid_argument("negative omega mass");
  if (std::abs(m.sum() - 1.0) > kMassTolerance) {
    throw std::invalid_argument("masses do not sum to one");
  }
  return m;
}

GeneralMassFunction vacuous(FramePtr frame) {
  check_frame(frame);
  const SubsetMask omega = frame->omega();
  return GeneralMassFunction{std::move(frame), {{omega, 1.0}}};
}

GeneralMassFunction to_general(const MassVector& m) {
  GeneralMassFunction out{m.frame, {}};
  for (std::size_t j = 0; j < m.singletons.size(); ++j) {
    if (m.singletons[j] > 0.0) out.focal[singleton_mask(j)] = m.singletons[j];
  }
  if (m.omega > 0.0) out.focal[m.frame->omega()] += m.omega;
  return out;
}

bool is_normalized(const GeneralMassFunction& m) {
  double total = 0.0;
  for (const auto& [subset, mass] : m.focal) {
    if (subset == 0 || !(mass >= 0.0)) return false;
    total += mass;
  }
  return std::abs(total - 1.0) <= kMassTolerance;
}

bool is_normalized(const MassVector& m) {
  for (double v : m.singletons) {
    if (!(v >= 0.0)) return false;
  }
  if (!(m.omega >= 0.0)) return false;
  return std::abs(m.sum() - 1.0) <= kMassTolerance;
}

GeneralMassFunction combine_dempster(const GeneralMassFunction& m1,
                                     const GeneralMassFunction& m2) {
  if (!m1.frame || !m2.frame || !(*m1.frame == *m2.frame)) {
    throw std::invalid_argument("combining masses on different frames");
  }

  std::map<SubsetMask, double> combined;
  double conflict = 0.0;
  for (const auto& [a, ma] : m1.focal) {
    for (const auto& [b, mb] : m2.focal) {
      const SubsetMask inter = a & b;
      const double product = ma * mb;
      if (inter == 0) {
        conflict += product;
      } else {
        combined[inter] += product;
      }
    }
  }

  const double denom = 1.0 - conflict;
  if (denom < 1e-12) {
    throw TotalConflict("total conflict: combined mass lies on the empty set");
  }

  // Renormalize once, clamping sub-1e-15 residue to zero.
  double total = 0.0;
  for (auto it = combined.begin(); it != combined.end();) {
    it->second /= denom;
    if (it->second < kMassClamp) {
      it = combined.erase(it);
    } else {
      total += it->second;
      ++it;
    }
  }
  if (total <= 0.0) {
    throw TotalConflict("total conflict: no mass survives combination");
  }
  for (auto& [subset, mass] : combined) mass /= total;

  return GeneralMassFunction{m1.frame, std::move(combined)};
}

namespace {

double extremal_expectation(const GeneralMassFunction& m,
                            std::span<const double> utilities, bool lower) {
  if (utilities.size() != m.frame->size()) {
    throw std::invalid_argument("utility row size != frame size");
  }
  double total = 0.0;
  for (const auto& [subset, mass] : m.focal) {
    double ext = lower ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < utilities.size(); ++j) {
      if (!subset_contains(subset, j)) continue;
      ext = lower ? std::min(ext, utilities[j]) : std::max(ext, utilities[j]);
    }
    total += mass * ext;
  }
  return total;
}

}  // namespace

double lower_expectation(const GeneralMassFunction& m,
                         std::span<const double> act_utilities) {
  return extremal_expectation(m, act_utilities, /*lower=*/true);
}

double upper_expectation(const GeneralMassFunction& m,
                         std::span<const double> act_utilities) {
  return extremal_expectation(m, act_utilities, /*lower=*/false);
}

double hurwicz_expectation(const GeneralMassFunction& m,
                           std::span<const double> act_utilities, double nu) {
  if (!(nu >= 0.0 && nu <= 1.0)) {
    throw std::invalid_argument("nu outside [0,1]");
  }
  return nu * lower_expectation(m, act_utilities) +
         (1.0 - nu) * upper_expectation(m, act_utilities);
}

double hurwicz_expectation(const MassVector& m,
                           std::span<const double> act_utilities, double nu) {
  if (!(nu >= 0.0 && nu <= 1.0)) {
    throw std::invalid_argument("nu outside [0,1]");
  }
  if (act_utilities.size() != m.frame->size()) {
    throw std::invalid_argument("utility row size != frame size");
  }
  // Singleton focal sets have min = max; only Omega splits into min/max.
  double value = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < act_utilities.size(); ++j) {
    value += m.singletons[j] * act_utilities[j];
    lo = std::min(lo, act_utilities[j]);
    hi = std::max(hi, act_utilities[j]);
  }
  return value + m.omega * (nu * lo + (1.0 - nu) * hi);
}

}  // namespace evd
