#include "evd/utility.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "evd/errors.hpp"

namespace evd {

bool act_less(SubsetMask a, SubsetMask b) {
  const int ca = subset_size(a);
  const int cb = subset_size(b);
  if (ca != cb) return ca < cb;
  // Same cardinality: compare sorted index sequences element by element.
  while (a != 0 && b != 0) {
    const int ia = std::countr_zero(a);
    const int ib = std::countr_zero(b);
    if (ia != ib) return ia < ib;
    a &= a - 1;
    b &= b - 1;
  }
  return false;
}

ActCatalog::ActCatalog(FramePtr frame, std::vector<Act> acts)
    : frame_(std::move(frame)), acts_(std::move(acts)) {
  if (!frame_) throw std::invalid_argument("null frame");
  std::sort(acts_.begin(), acts_.end(),
            [](const Act& a, const Act& b) { return act_less(a.members, b.members); });
  acts_.erase(std::unique(acts_.begin(), acts_.end()), acts_.end());
  for (const Act& a : acts_) {
    if (a.members == 0 || (a.members & ~frame_->omega()) != 0) {
      throw std::invalid_argument("act is not a non-empty subset of the frame");
    }
  }
  for (std::size_t j = 0; j < frame_->size(); ++j) {
    if (!index_of(singleton_mask(j))) {
      throw std::invalid_argument("catalog is missing a singleton act");
    }
  }
  if (!index_of(frame_->omega())) {
    throw std::invalid_argument("catalog is missing the Omega act");
  }
}

std::optional<std::size_t> ActCatalog::index_of(SubsetMask members) const {
  for (std::size_t i = 0; i < acts_.size(); ++i) {
    if (acts_[i].members == members) return i;
  }
  return std::nullopt;
}

CatalogPtr build_full_catalog(FramePtr frame) {
  if (!frame) throw std::invalid_argument("null frame");
  if (frame->size() > 20) {
    throw CatalogTooLarge("full catalog with M > 20 classes");
  }
  std::vector<Act> acts;
  const SubsetMask omega = frame->omega();
  acts.reserve(omega);
  for (SubsetMask s = 1; s <= omega; ++s) acts.push_back(Act{s});
  return std::make_shared<const ActCatalog>(std::move(frame), std::move(acts));
}

CatalogPtr build_selected_catalog(FramePtr frame,
                                  const std::vector<SubsetMask>& multi_class) {
  if (!frame) throw std::invalid_argument("null frame");
  std::vector<Act> acts;
  for (std::size_t j = 0; j < frame->size(); ++j) {
    acts.push_back(Act{singleton_mask(j)});
  }
  acts.push_back(Act{frame->omega()});
  for (SubsetMask s : multi_class) acts.push_back(Act{s});
  return std::make_shared<const ActCatalog>(std::move(frame), std::move(acts));
}

double tdi(std::span<const double> weights) {
  const std::size_t n = weights.size();
  if (n <= 1) return 1.0;
  double value = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    value += weights[k - 1] * static_cast<double>(n - k) /
             static_cast<double>(n - 1);
  }
  return value;
}

namespace {

// Geometric weights g_k proportional to t^(k-1), normalized.
std::vector<double> geometric_weights(std::size_t n, double t) {
  std::vector<double> g(n);
  double power = 1.0;
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    g[k] = power;
    total += power;
    power *= t;
  }
  for (double& v : g) v /= total;
  return g;
}

}  // namespace

OwaWeights meowa_weights(std::size_t cardinality, double gamma) {
  if (cardinality == 0) throw std::invalid_argument("cardinality must be >= 1");
  if (!(gamma >= 0.5 && gamma <= 1.0)) {
    throw std::invalid_argument("gamma outside [0.5, 1]");
  }
  if (cardinality == 1) return {1, gamma, {1.0}};
  if (gamma == 1.0) {
    std::vector<double> g(cardinality, 0.0);
    g[0] = 1.0;
    return {cardinality, gamma, std::move(g)};
  }
  if (gamma == 0.5) {  // analytic solution t = 1: exactly uniform
    return {cardinality, gamma,
            std::vector<double>(cardinality, 1.0 / cardinality)};
  }

  // TDI(t) decreases from 1 at t=0 to 0.5 at t=1 (uniform weights), so the
  // root is bracketed by [0, 1]. Bisect on the gamma residual.
  double lo = 0.0, hi = 1.0;
  std::vector<double> g = geometric_weights(cardinality, 0.5);
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    g = geometric_weights(cardinality, mid);
    const double residual = tdi(g) - gamma;
    if (std::abs(residual) <= 1e-12) break;
    if (residual > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {cardinality, gamma, std::move(g)};
}

ExtendedUtilityMatrix::ExtendedUtilityMatrix(CatalogPtr catalog,
                                             std::vector<double> original,
                                             std::vector<double> extended,
                                             double gamma)
    : catalog_(std::move(catalog)),
      original_(std::move(original)),
      extended_(std::move(extended)),
      gamma_(gamma) {
  const std::size_t m = catalog_->frame()->size();
  if (original_.size() != m * m || extended_.size() != catalog_->size() * m) {
    throw std::invalid_argument("utility matrix shape mismatch");
  }
}

ExtendedUtilityMatrix extend_utility_matrix(std::span<const double> original,
                                            CatalogPtr catalog, double gamma) {
  if (!catalog) throw std::invalid_argument("null catalog");
  const std::size_t m = catalog->frame()->size();
  if (original.size() != m * m) {
    throw std::invalid_argument("original utility matrix must be M x M");
  }
  for (double u : original) {
    if (!(u >= 0.0 && u <= 1.0)) {
      throw std::invalid_argument("utilities must lie in [0,1]");
    }
  }

  // One weight vector per act cardinality present in the catalog.
  std::vector<std::vector<double>> weights_by_size(m + 1);
  for (const Act& act : catalog->acts()) {
    auto& w = weights_by_size[act.cardinality()];
    if (w.empty()) w = meowa_weights(act.cardinality(), gamma).weights;
  }

  std::vector<double> extended(catalog->size() * m, 0.0);
  std::vector<double> in_set;
  for (std::size_t a = 0; a < catalog->size(); ++a) {
    const Act& act = catalog->act(a);
    const auto& g = weights_by_size[act.cardinality()];
    for (std::size_t j = 0; j < m; ++j) {
      in_set.clear();
      for (std::size_t i = 0; i < m; ++i) {
        if (act.contains(i)) in_set.push_back(original[i * m + j]);
      }
      std::sort(in_set.begin(), in_set.end(), std::greater<>());
      double value = 0.0;
      for (std::size_t k = 0; k < in_set.size(); ++k) value += g[k] * in_set[k];
      extended[a * m + j] = value;
    }
  }
  return {catalog,
          std::vector<double>(original.begin(), original.end()),
          std::move(extended), gamma};
}

std::vector<double> identity_utilities(std::size_t classes) {
  std::vector<double> u(classes * classes, 0.0);
  for (std::size_t i = 0; i < classes; ++i) u[i * classes + i] = 1.0;
  return u;
}

void write_utilities_csv(const ExtendedUtilityMatrix& eum, std::ostream& out) {
  const Frame& frame = *eum.catalog()->frame();
  out << "act";
  for (const auto& label : frame.labels()) out << ',' << label;
  out << '\n';
  char buf[32];
  for (std::size_t a = 0; a < eum.catalog()->size(); ++a) {
    out << frame.subset_name(eum.catalog()->act(a).members);
    for (std::size_t j = 0; j < frame.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", eum.value(a, j));
      out << ',' << buf;
    }
    out << '\n';
  }
}

std::vector<double> read_original_utilities_csv(std::istream& in,
                                                const Frame& frame) {
  const std::size_t m = frame.size();
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument("utility CSV: missing header");
  }
  std::vector<double> original(m * m, -1.0);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    if (!std::getline(row, cell, ',')) continue;
    const SubsetMask mask = frame.subset_from_name(cell);
    if (subset_size(mask) != 1) continue;  // only singleton rows define U
    const std::size_t i = static_cast<std::size_t>(std::countr_zero(mask));
    for (std::size_t j = 0; j < m; ++j) {
      if (!std::getline(row, cell, ',')) {
        throw std::invalid_argument("utility CSV: short row");
      }
      original[i * m + j] = std::stod(cell);
    }
  }
  for (double u : original) {
    if (u < 0.0 || u > 1.0) {
      throw std::invalid_argument(
          "utility CSV: needs all singleton rows with entries in [0,1]");
    }
  }
  return original;
}

}  // namespace evd
