#include "evd/batch.hpp"

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace evd {

MassVector predict_mass(const FeatureNet& net, const PrototypeBank& bank,
                        const std::vector<double>& row) {
  if (net.layers.empty()) {
    return ds_forward_mass(row, bank);
  }
  Tensor input{net.input_shape, row};
  return ds_forward_mass(net_apply(input, net), bank);
}

int batch_threads() {
  const char* env = std::getenv("EVD_THREADS");
  if (env == nullptr) return 1;
  const int n = std::atoi(env);
  return n > 0 ? n : 1;
}

std::vector<MassVector> predict_mass_batch_serial(
    const FeatureNet& net, const PrototypeBank& bank,
    const std::vector<std::vector<double>>& rows) {
  std::vector<MassVector> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(predict_mass(net, bank, row));
  return out;
}

std::vector<Decision> decide_batch_serial(
    const FeatureNet& net, const PrototypeBank& bank,
    const ExtendedUtilityMatrix& eum, double nu,
    const std::vector<std::vector<double>>& rows) {
  std::vector<Decision> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    out.push_back(
        decide(expected_utilities(predict_mass(net, bank, row), eum, nu)));
  }
  return out;
}

namespace {

// An exception escaping an OpenMP region terminates the process, so worker
// failures are captured and rethrown after the loop.
template <class Out, class Fn>
std::vector<Out> parallel_map(const std::vector<std::vector<double>>& rows,
                              int threads, Fn&& fn) {
  std::vector<Out> out(rows.size());
  std::exception_ptr failure;
  const auto count = static_cast<std::int64_t>(rows.size());
#ifdef _OPENMP
#pragma omp parallel for num_threads(threads) schedule(static)
#endif
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      out[i] = fn(rows[i]);
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace

std::vector<MassVector> predict_mass_batch(
    const FeatureNet& net, const PrototypeBank& bank,
    const std::vector<std::vector<double>>& rows) {
  const int threads = batch_threads();
  if (threads <= 1 || rows.size() < 2) {
    return predict_mass_batch_serial(net, bank, rows);
  }
  return parallel_map<MassVector>(rows, threads, [&](const auto& row) {
    return predict_mass(net, bank, row);
  });
}

std::vector<Decision> decide_batch(const FeatureNet& net,
                                   const PrototypeBank& bank,
                                   const ExtendedUtilityMatrix& eum, double nu,
                                   const std::vector<std::vector<double>>& rows) {
  const int threads = batch_threads();
  if (threads <= 1 || rows.size() < 2) {
    return decide_batch_serial(net, bank, eum, nu, rows);
  }
  return parallel_map<Decision>(rows, threads, [&](const auto& row) {
    return decide(expected_utilities(predict_mass(net, bank, row), eum, nu));
  });
}

}  // namespace evd
