#include "evd/ds_layer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "evd/errors.hpp"
#include "evd/rng.hpp"

namespace evd {

double PrototypeBank::alpha(std::size_t i) const {
  const double v = xi[i];
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

std::vector<double> PrototypeBank::membership(std::size_t i) const {
  std::vector<double> h(frame->size());
  membership_into(i, h);
  return h;
}

void PrototypeBank::membership_into(std::size_t i,
                                    std::span<double> out) const {
  const std::size_t m = frame->size();
  const double* row = membership_logits.data() + i * m;
  const double peak = *std::max_element(row, row + m);
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    out[j] = std::exp(row[j] - peak);
    total += out[j];
  }
  for (std::size_t j = 0; j < m; ++j) out[j] /= total;
}

void PrototypeBank::check_shapes() const {
  if (!frame) throw std::invalid_argument("bank has no frame");
  const std::size_t m = frame->size();
  if (count == 0) throw std::invalid_argument("bank has no prototypes");
  if (prototypes.size() != count * feature_dim || eta.size() != count ||
      xi.size() != count || membership_logits.size() != count * m) {
    throw std::invalid_argument("prototype bank tensor shapes disagree");
  }
}

double support(std::span<const double> x, const PrototypeBank& bank,
               std::size_t i) {
  if (x.size() != bank.feature_dim) {
    throw std::invalid_argument("input dimension != bank feature dimension");
  }
  const auto p = bank.prototype(i);
  double d2 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double diff = x[k] - p[k];
    d2 += diff * diff;
  }
  const double scaled = bank.eta[i] * bank.eta[i] * d2;
  return bank.alpha(i) * std::exp(-scaled);
}

MassVector prototype_mass(double s, std::span<const double> h,
                          FramePtr frame) {
  if (!(s >= 0.0 && s < 1.0)) {
    throw std::invalid_argument("support must lie in [0,1)");
  }
  MassVector m{std::move(frame), std::vector<double>(h.size()), 1.0 - s};
  for (std::size_t j = 0; j < h.size(); ++j) m.singletons[j] = h[j] * s;
  return m;
}

namespace {

// One conjunctive step of the combination recursion:
// mu_j <- mu_j (m_j + m_O) + mu_O m_j ; mu_O <- mu_O m_O.
void combine_step(std::vector<double>& mu, const double* m_single,
                  double m_omega, std::size_t classes) {
  const double mu_omega = mu[classes];
  for (std::size_t j = 0; j < classes; ++j) {
    mu[j] = mu[j] * (m_single[j] + m_omega) + mu_omega * m_single[j];
  }
  mu[classes] = mu_omega * m_omega;
}

// Scale is irrelevant after the final normalization; dividing by the max
// entry each step keeps long chains away from underflow.
void renormalize_by_max(std::vector<double>& mu) {
  const double peak = *std::max_element(mu.begin(), mu.end());
  if (peak > 0.0) {
    for (double& v : mu) v /= peak;
  }
}

MassVector normalize_accumulator(const std::vector<double>& mu,
                                 const FramePtr& frame) {
  const double total = std::accumulate(mu.begin(), mu.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw DegenerateNormalizer("combined mass normalizer is zero");
  }
  MassVector out{frame, std::vector<double>(mu.begin(), mu.end() - 1),
                 mu.back() / total};
  for (double& v : out.singletons) v /= total;
  return out;
}

}  // namespace

MassVector combine_prototypes(const std::vector<MassVector>& masses) {
  if (masses.empty()) {
    throw std::invalid_argument("no masses to combine");
  }
  const FramePtr& frame = masses.front().frame;
  const std::size_t classes = frame->size();
  for (const MassVector& m : masses) {
    if (!(*m.frame == *frame)) {
      throw std::invalid_argument("combining masses on different frames");
    }
  }

  std::vector<double> mu(masses.front().singletons);
  mu.push_back(masses.front().omega);
  for (std::size_t i = 1; i < masses.size(); ++i) {
    combine_step(mu, masses[i].singletons.data(), masses[i].omega, classes);
    renormalize_by_max(mu);
  }
  return normalize_accumulator(mu, frame);
}

std::pair<MassVector, DsForwardTrace> ds_forward(std::span<const double> x,
                                                 const PrototypeBank& bank) {
  bank.check_shapes();
  if (x.size() != bank.feature_dim) {
    throw std::invalid_argument("input dimension != bank feature dimension");
  }
  const std::size_t n = bank.count;
  const std::size_t classes = bank.frame->size();

  DsForwardTrace trace;
  trace.distances.resize(n);
  trace.supports.resize(n);
  trace.memberships.resize(n * classes);
  trace.prototype_masses.resize(n * (classes + 1));
  trace.accumulators.resize(n * (classes + 1));

  std::vector<double> mu(classes + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = bank.prototype(i);
    double d2 = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double diff = x[k] - p[k];
      d2 += diff * diff;
    }
    trace.distances[i] = std::sqrt(d2);
    const double s = bank.alpha(i) * std::exp(-bank.eta[i] * bank.eta[i] * d2);
    trace.supports[i] = s;

    const std::vector<double> h = bank.membership(i);
    double* mass_row = trace.prototype_masses.data() + i * (classes + 1);
    for (std::size_t j = 0; j < classes; ++j) {
      trace.memberships[i * classes + j] = h[j];
      mass_row[j] = h[j] * s;
    }
    mass_row[classes] = 1.0 - s;

    if (i == 0) {
      mu.assign(mass_row, mass_row + classes + 1);
    } else {
      combine_step(mu, mass_row, mass_row[classes], classes);
      renormalize_by_max(mu);
    }
    std::copy(mu.begin(), mu.end(),
              trace.accumulators.begin() + i * (classes + 1));
  }

  trace.output = normalize_accumulator(mu, bank.frame);
  return {trace.output, std::move(trace)};
}

MassVector ds_forward_mass(std::span<const double> x,
                           const PrototypeBank& bank) {
  bank.check_shapes();
  if (x.size() != bank.feature_dim) {
    throw std::invalid_argument("input dimension != bank feature dimension");
  }
  const std::size_t classes = bank.frame->size();

  std::vector<double> h(classes);
  std::vector<double> mass(classes);
  std::vector<double> mu(classes + 1, 0.0);
  for (std::size_t i = 0; i < bank.count; ++i) {
    const auto p = bank.prototype(i);
    double d2 = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double diff = x[k] - p[k];
      d2 += diff * diff;
    }
    const double s = bank.alpha(i) * std::exp(-bank.eta[i] * bank.eta[i] * d2);
    bank.membership_into(i, h);
    for (std::size_t j = 0; j < classes; ++j) mass[j] = h[j] * s;

    if (i == 0) {
      std::copy(mass.begin(), mass.end(), mu.begin());
      mu[classes] = 1.0 - s;
    } else {
      combine_step(mu, mass.data(), 1.0 - s, classes);
      renormalize_by_max(mu);
    }
  }
  return normalize_accumulator(mu, bank.frame);
}

DsGradients ds_backward(const DsForwardTrace& trace, std::span<const double> x,
                        const PrototypeBank& bank,
                        std::span<const double> dL_dm) {
  bank.check_shapes();
  const std::size_t n = bank.count;
  const std::size_t classes = bank.frame->size();
  if (dL_dm.size() != classes + 1) {
    throw std::invalid_argument("dL_dm must have M+1 entries");
  }
  if (trace.supports.size() != n || trace.distances.size() != n ||
      trace.memberships.size() != n * classes) {
    throw TraceMismatch("trace shape does not match bank");
  }

  // Recompute supports; a trace from a different (x, bank) will not agree.
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = bank.prototype(i);
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double diff = x[k] - p[k];
      acc += diff * diff;
    }
    d2[i] = acc;
    const double s = bank.alpha(i) * std::exp(-bank.eta[i] * bank.eta[i] * acc);
    if (std::abs(s - trace.supports[i]) > 1e-9) {
      throw TraceMismatch("trace supports disagree with (x, bank)");
    }
  }

  // Closed form of the combination recursion, per class j:
  //   mu_j = prod_i q_ij - V,  mu_O = V,
  // with q_ij = 1 - s_i (1 - h_ij) and V = prod_i (1 - s_i).
  // Leave-one-out products are built from prefix/suffix passes so no
  // division by a possibly tiny q is needed.
  std::vector<double> q(n * classes);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = trace.supports[i];
    v[i] = 1.0 - s;
    for (std::size_t j = 0; j < classes; ++j) {
      q[i * classes + j] = 1.0 - s * (1.0 - trace.memberships[i * classes + j]);
    }
  }

  std::vector<double> prefix_q(n * classes), suffix_q(n * classes);
  std::vector<double> prefix_v(n), suffix_v(n);
  for (std::size_t j = 0; j < classes; ++j) {
    double run = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      prefix_q[i * classes + j] = run;
      run *= q[i * classes + j];
    }
    run = 1.0;
    for (std::size_t i = n; i-- > 0;) {
      suffix_q[i * classes + j] = run;
      run *= q[i * classes + j];
    }
  }
  {
    double run = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      prefix_v[i] = run;
      run *= v[i];
    }
    run = 1.0;
    for (std::size_t i = n; i-- > 0;) {
      suffix_v[i] = run;
      run *= v[i];
    }
  }

  std::vector<double> product_q(classes);  // P_j = prod_i q_ij
  for (std::size_t j = 0; j < classes; ++j) {
    product_q[j] = prefix_q[(n - 1) * classes + j] * q[(n - 1) * classes + j];
  }
  const double product_v = prefix_v[n - 1] * v[n - 1];

  // Normalization backward: m_a = mu_a / K.
  const double normalizer =
      std::accumulate(product_q.begin(), product_q.end(),
                      product_v * (1.0 - static_cast<double>(classes)));
  if (!(normalizer > 0.0)) {
    throw DegenerateNormalizer("combined mass normalizer is zero");
  }
  double weighted = 0.0;
  for (std::size_t j = 0; j < classes; ++j) {
    weighted += dL_dm[j] * trace.output.singletons[j];
  }
  weighted += dL_dm[classes] * trace.output.omega;

  std::vector<double> dmu(classes + 1);
  for (std::size_t a = 0; a <= classes; ++a) {
    dmu[a] = (dL_dm[a] - weighted) / normalizer;
  }

  // mu_j = P_j - V and mu_O = V.
  const std::vector<double>& dP = dmu;  // dL/dP_j = dL/dmu_j
  double dV = dmu[classes];
  for (std::size_t j = 0; j < classes; ++j) dV -= dmu[j];

  DsGradients grads;
  grads.prototypes.assign(n * bank.feature_dim, 0.0);
  grads.eta.assign(n, 0.0);
  grads.xi.assign(n, 0.0);
  grads.membership_logits.assign(n * classes, 0.0);
  grads.input.assign(bank.feature_dim, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    const double s = trace.supports[i];
    double dL_ds = -dV * prefix_v[i] * suffix_v[i];
    std::vector<double> dh(classes);
    for (std::size_t j = 0; j < classes; ++j) {
      const double loo = prefix_q[i * classes + j] * suffix_q[i * classes + j];
      const double dq = dP[j] * loo;
      const double h = trace.memberships[i * classes + j];
      dL_ds += dq * (h - 1.0);
      dh[j] = dq * s;
    }

    // Softmax Jacobian into the free logits.
    double dot = 0.0;
    for (std::size_t j = 0; j < classes; ++j) {
      dot += dh[j] * trace.memberships[i * classes + j];
    }
    for (std::size_t j = 0; j < classes; ++j) {
      const double h = trace.memberships[i * classes + j];
      grads.membership_logits[i * classes + j] = h * (dh[j] - dot);
    }

    const double eta = bank.eta[i];
    const double alpha = bank.alpha(i);
    const auto p = bank.prototype(i);
    const double eta2s = eta * eta * s;
    for (std::size_t k = 0; k < bank.feature_dim; ++k) {
      const double diff = x[k] - p[k];
      grads.prototypes[i * bank.feature_dim + k] = dL_ds * 2.0 * eta2s * diff;
      grads.input[k] += dL_ds * (-2.0) * eta2s * diff;
    }
    grads.eta[i] = dL_ds * (-2.0) * eta * d2[i] * s;
    grads.xi[i] = dL_ds * std::exp(-eta * eta * d2[i]) * alpha * (1.0 - alpha);
  }
  return grads;
}

namespace {

// Lloyd's algorithm with a fixed iteration budget; initial centroids are
// distinct samples drawn with the shared seeded generator. A cluster that
// empties keeps its previous centroid.
std::vector<std::vector<double>> kmeans(
    const std::vector<const std::vector<double>*>& points, std::size_t k,
    Rng& rng) {
  const std::size_t dim = points.front()->size();
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  std::vector<std::vector<double>> centroids(k);
  for (std::size_t c = 0; c < k; ++c) centroids[c] = *points[order[c]];

  std::vector<std::size_t> assignment(points.size(), 0);
  for (int iter = 0; iter < 25; ++iter) {
    for (std::size_t p = 0; p < points.size(); ++p) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        double dist = 0.0;
        for (std::size_t t = 0; t < dim; ++t) {
          const double diff = (*points[p])[t] - centroids[c][t];
          dist += diff * diff;
        }
        if (dist < best) {
          best = dist;
          assignment[p] = c;
        }
      }
    }
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t p = 0; p < points.size(); ++p) {
      ++counts[assignment[p]];
      for (std::size_t t = 0; t < dim; ++t) {
        sums[assignment[p]][t] += (*points[p])[t];
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t t = 0; t < dim; ++t) {
        centroids[c][t] = sums[c][t] / static_cast<double>(counts[c]);
      }
    }
  }
  return centroids;
}

}  // namespace

PrototypeBank init_prototypes(const std::vector<std::vector<double>>& features,
                              const std::vector<int>& labels, FramePtr frame,
                              std::size_t per_class, std::uint64_t seed) {
  if (!frame) throw std::invalid_argument("null frame");
  if (features.size() != labels.size() || features.empty()) {
    throw std::invalid_argument("features/labels size mismatch");
  }
  if (per_class == 0) throw std::invalid_argument("per_class must be >= 1");
  const std::size_t classes = frame->size();
  const std::size_t dim = features.front().size();

  Rng rng(seed);
  PrototypeBank bank;
  bank.frame = frame;
  bank.feature_dim = dim;
  bank.count = classes * per_class;
  bank.eta.assign(bank.count, 1.0);
  bank.xi.assign(bank.count, 0.0);
  bank.membership_logits.assign(bank.count * classes, 0.0);

  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<const std::vector<double>*> members;
    for (std::size_t r = 0; r < features.size(); ++r) {
      if (labels[r] == static_cast<int>(c)) members.push_back(&features[r]);
    }
    if (members.size() < per_class) {
      throw InsufficientSamples("class " + frame->label(c) + " has " +
                                std::to_string(members.size()) +
                                " samples, needs " + std::to_string(per_class));
    }
    const auto centroids = kmeans(members, per_class, rng);
    for (const auto& centroid : centroids) {
      bank.prototypes.insert(bank.prototypes.end(), centroid.begin(),
                             centroid.end());
    }
    for (std::size_t r = 0; r < per_class; ++r) {
      const std::size_t i = c * per_class + r;
      bank.membership_logits[i * classes + c] = 2.0;
    }
  }

  // Shared scale: inverse mean pairwise prototype distance.
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < bank.count; ++a) {
    for (std::size_t b = a + 1; b < bank.count; ++b) {
      double d2v = 0.0;
      for (std::size_t t = 0; t < dim; ++t) {
        const double diff = bank.prototypes[a * dim + t] - bank.prototypes[b * dim + t];
        d2v += diff * diff;
      }
      total += std::sqrt(d2v);
      ++pairs;
    }
  }
  const double mean = pairs > 0 ? total / static_cast<double>(pairs) : 0.0;
  const double eta0 = mean > 0.0 ? 1.0 / mean : 1.0;
  std::fill(bank.eta.begin(), bank.eta.end(), eta0);

  bank.check_shapes();
  return bank;
}

}  // namespace evd
