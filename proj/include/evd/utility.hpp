#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "evd/frame.hpp"

namespace evd {

// Assignment of a sample to a non-empty subset of classes.
struct Act {
  SubsetMask members = 0;

  int cardinality() const { return subset_size(members); }
  bool contains(std::size_t j) const { return subset_contains(members, j); }

  friend bool operator==(const Act& a, const Act& b) {
    return a.members == b.members;
  }
};

// Orders acts by cardinality, then lexicographically on the sorted index
// sequence. This is the catalog order and also the decide() tie preference.
bool act_less(SubsetMask a, SubsetMask b);

// Ordered list of acts under consideration. Always contains the M
// singletons and Omega; order is deterministic (cardinality, then
// lexicographic on indices).
class ActCatalog {
 public:
  ActCatalog(FramePtr frame, std::vector<Act> acts);

  const FramePtr& frame() const { return frame_; }
  const std::vector<Act>& acts() const { return acts_; }
  std::size_t size() const { return acts_.size(); }
  const Act& act(std::size_t i) const { return acts_[i]; }
  std::optional<std::size_t> index_of(SubsetMask members) const;

 private:
  FramePtr frame_;
  std::vector<Act> acts_;
};

using CatalogPtr = std::shared_ptr<const ActCatalog>;

// Every non-empty subset of the frame; throws CatalogTooLarge for M > 20.
CatalogPtr build_full_catalog(FramePtr frame);
// Singletons + Omega + the given multi-class subsets, deduplicated.
CatalogPtr build_selected_catalog(FramePtr frame,
                                  const std::vector<SubsetMask>& multi_class);

// Maximum-entropy OWA weights for one act cardinality.
struct OwaWeights {
  std::size_t cardinality = 0;
  double gamma = 0.0;
  std::vector<double> weights;  // g_1..g_|A|, non-increasing for gamma >= 0.5
};

// Imprecision tolerance degree of a weight vector (1 = full tolerance,
// 0.5 = uniform weights).
double tdi(std::span<const double> weights);

// Solves max entropy s.t. TDI(g) = gamma, sum g = 1, g >= 0. The solution
// is geometric, g_k proportional to t^(k-1); t is found by bisection.
OwaWeights meowa_weights(std::size_t cardinality, double gamma);

// Original M x M utilities extended to every act in the catalog by OWA
// aggregation of the within-set per-class utilities.
class ExtendedUtilityMatrix {
 public:
  ExtendedUtilityMatrix(CatalogPtr catalog, std::vector<double> original,
                        std::vector<double> extended, double gamma);

  const CatalogPtr& catalog() const { return catalog_; }
  double gamma() const { return gamma_; }
  std::size_t classes() const { return catalog_->frame()->size(); }

  // u_ij: utility of selecting class i when the truth is class j.
  double original(std::size_t i, std::size_t j) const {
    return original_[i * classes() + j];
  }
  std::span<const double> original_matrix() const { return original_; }

  // u-hat_{A,j} for act row a in catalog order.
  double value(std::size_t act_row, std::size_t true_class) const {
    return extended_[act_row * classes() + true_class];
  }
  std::span<const double> act_row(std::size_t act_row) const {
    return {extended_.data() + act_row * classes(), classes()};
  }

 private:
  CatalogPtr catalog_;
  std::vector<double> original_;  // M x M
  std::vector<double> extended_;  // |catalog| x M
  double gamma_;
};

ExtendedUtilityMatrix extend_utility_matrix(std::span<const double> original,
                                            CatalogPtr catalog, double gamma);

std::vector<double> identity_utilities(std::size_t classes);

// CSV form: header "act,<class...>", one row per act in catalog order,
// act written as '+'-joined class names.
void write_utilities_csv(const ExtendedUtilityMatrix& eum, std::ostream& out);
// Reads an M x M original utility matrix from the same CSV shape
// restricted to singleton acts.
std::vector<double> read_original_utilities_csv(std::istream& in,
                                                const Frame& frame);

}  // namespace evd
