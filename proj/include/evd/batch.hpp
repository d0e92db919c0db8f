#pragma once

#include <vector>

#include "evd/decision.hpp"
#include "evd/model.hpp"

namespace evd {

// Thread count for batch kernels, from EVD_THREADS (default 1).
int batch_threads();

// Serial reference kernels, kept as the oracle for the parallel versions.
std::vector<MassVector> predict_mass_batch_serial(
    const FeatureNet& net, const PrototypeBank& bank,
    const std::vector<std::vector<double>>& rows);
std::vector<Decision> decide_batch_serial(
    const FeatureNet& net, const PrototypeBank& bank,
    const ExtendedUtilityMatrix& eum, double nu,
    const std::vector<std::vector<double>>& rows);

// OpenMP kernels. Each sample is pure and writes its own slot, so results
// are identical to the serial reference for any thread count.
std::vector<MassVector> predict_mass_batch(
    const FeatureNet& net, const PrototypeBank& bank,
    const std::vector<std::vector<double>>& rows);
std::vector<Decision> decide_batch(const FeatureNet& net,
                                   const PrototypeBank& bank,
                                   const ExtendedUtilityMatrix& eum, double nu,
                                   const std::vector<std::vector<double>>& rows);

inline std::vector<Decision> decide_batch(
    const Model& model, const ExtendedUtilityMatrix& eum, double nu,
    const std::vector<std::vector<double>>& rows) {
  return decide_batch(model.net, model.bank, eum, nu, rows);
}

}  // namespace evd
