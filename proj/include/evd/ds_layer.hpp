#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "evd/mass.hpp"

namespace evd {

// Learnable parameters of the distance-based DS layer: n prototypes in
// feature space, each with a scale eta, an unconstrained pre-activation xi
// (alpha = logistic(xi) in (0,1)) and free membership logits whose softmax
// gives the class memberships h.
struct PrototypeBank {
  FramePtr frame;
  std::size_t feature_dim = 0;  // P
  std::size_t count = 0;        // n
  std::vector<double> prototypes;         // n x P
  std::vector<double> eta;                // n
  std::vector<double> xi;                 // n
  std::vector<double> membership_logits;  // n x M

  std::span<const double> prototype(std::size_t i) const {
    return {prototypes.data() + i * feature_dim, feature_dim};
  }
  double alpha(std::size_t i) const;
  // Softmax of the i-th logit row.
  std::vector<double> membership(std::size_t i) const;
  void membership_into(std::size_t i, std::span<double> out) const;

  void check_shapes() const;  // throws std::invalid_argument
};

// Intermediates of one forward pass, kept for the backward pass.
struct DsForwardTrace {
  std::vector<double> distances;   // d^i
  std::vector<double> supports;    // s^i
  std::vector<double> memberships;        // n x M softmax rows
  std::vector<double> prototype_masses;   // n x (M+1), singletons then Omega
  std::vector<double> accumulators;       // n x (M+1) combination recursion,
                                          // renormalized per step by its max
  MassVector output;
};

// Gradients w.r.t. every bank parameter and the layer input.
struct DsGradients {
  std::vector<double> prototypes;         // n x P
  std::vector<double> eta;                // n
  std::vector<double> xi;                 // n
  std::vector<double> membership_logits;  // n x M
  std::vector<double> input;              // P
};

// Distance-based support s^i = alpha^i exp(-(eta^i d^i)^2).
double support(std::span<const double> x, const PrototypeBank& bank,
               std::size_t i);

// Per-prototype simple mass: m({w_j}) = h_j s, m(Omega) = 1 - s.
MassVector prototype_mass(double s, std::span<const double> h, FramePtr frame);

// Dempster aggregation of simple masses via the two-term recursion,
// followed by output normalization. Throws DegenerateNormalizer if the
// normalizing sum vanishes.
MassVector combine_prototypes(const std::vector<MassVector>& masses);

std::pair<MassVector, DsForwardTrace> ds_forward(std::span<const double> x,
                                                 const PrototypeBank& bank);

// Inference-only forward: identical arithmetic to ds_forward but without
// building the trace, for allocation-free batch evaluation.
MassVector ds_forward_mass(std::span<const double> x,
                           const PrototypeBank& bank);

// Exact chain-rule gradients given dL/dm over the normalized output
// (M singleton entries followed by the Omega entry). dL/ds is obtained by
// differentiating the product closed form of the combination recursion.
// Throws TraceMismatch if the trace was not produced from (x, bank).
DsGradients ds_backward(const DsForwardTrace& trace, std::span<const double> x,
                        const PrototypeBank& bank,
                        std::span<const double> dL_dm);

// Per-class k-means prototypes (fixed 25 Lloyd iterations, seeded),
// xi = 0 (alpha = 0.5), eta = 1 / mean pairwise prototype distance,
// membership logits 2 for the owning class and 0 elsewhere.
PrototypeBank init_prototypes(const std::vector<std::vector<double>>& features,
                              const std::vector<int>& labels, FramePtr frame,
                              std::size_t per_class, std::uint64_t seed);

}  // namespace evd
