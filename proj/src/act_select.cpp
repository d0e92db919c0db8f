#include "evd/act_select.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

#include "evd/errors.hpp"

namespace evd {

ConfusionMatrix confusion_matrix(const std::vector<Decision>& decisions,
                                 const std::vector<int>& labels,
                                 FramePtr frame) {
  if (!frame) throw std::invalid_argument("null frame");
  if (decisions.size() != labels.size()) {
    throw std::invalid_argument("decisions/labels size mismatch");
  }
  const std::size_t m = frame->size();
  ConfusionMatrix cm{frame, std::vector<std::int64_t>(m * m, 0)};
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    if (decisions[i].act.cardinality() != 1) {
      throw std::invalid_argument(
          "confusion matrix needs precise (singleton) decisions");
    }
    if (labels[i] < 0 || labels[i] >= static_cast<int>(m)) {
      throw std::invalid_argument("label outside the frame");
    }
    const auto predicted =
        static_cast<std::size_t>(std::countr_zero(decisions[i].act.members));
    ++cm.counts[predicted * m + static_cast<std::size_t>(labels[i])];
  }
  return cm;
}

std::vector<std::vector<double>> normalize_columns(const ConfusionMatrix& cm) {
  const std::size_t m = cm.frame->size();
  std::vector<std::vector<double>> features(m, std::vector<double>(m));
  for (std::size_t j = 0; j < m; ++j) {
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      total += static_cast<double>(cm.at(i, j));
    }
    if (total <= 0.0) {
      throw EmptyColumn("confusion column " + cm.frame->label(j) +
                        " has no samples");
    }
    for (std::size_t i = 0; i < m; ++i) {
      features[j][i] = static_cast<double>(cm.at(i, j)) / total;
    }
  }
  return features;
}

Linkage linkage_from_name(const std::string& name) {
  if (name == "single") return Linkage::Single;
  if (name == "complete") return Linkage::Complete;
  if (name == "average") return Linkage::Average;
  if (name == "ward") return Linkage::Ward;
  throw std::invalid_argument("unknown linkage: " + name);
}

std::string linkage_name(Linkage l) {
  switch (l) {
    case Linkage::Single: return "single";
    case Linkage::Complete: return "complete";
    case Linkage::Average: return "average";
    case Linkage::Ward: return "ward";
  }
  throw std::invalid_argument("bad linkage enum");
}

namespace {

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  double d2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    d2 += diff * diff;
  }
  return std::sqrt(d2);
}

struct Cluster {
  std::size_t id = 0;
  std::size_t size = 0;
  SubsetMask members = 0;
};

// Lance-Williams distance between cluster k and the merge of i and j.
double lance_williams(Linkage linkage, double d_ki, double d_kj, double d_ij,
                      double n_i, double n_j, double n_k) {
  switch (linkage) {
    case Linkage::Single:
      return std::min(d_ki, d_kj);
    case Linkage::Complete:
      return std::max(d_ki, d_kj);
    case Linkage::Average:
      return (n_i * d_ki + n_j * d_kj) / (n_i + n_j);
    case Linkage::Ward: {
      const double total = n_i + n_j + n_k;
      const double sq = ((n_i + n_k) * d_ki * d_ki + (n_j + n_k) * d_kj * d_kj -
                         n_k * d_ij * d_ij) /
                        total;
      return std::sqrt(std::max(sq, 0.0));
    }
  }
  return 0.0;
}

}  // namespace

LinkageTree hac(const std::vector<std::vector<double>>& features,
                Linkage linkage) {
  const std::size_t m = features.size();
  if (m < 2) throw std::invalid_argument("HAC needs at least 2 features");

  std::vector<Cluster> active(m);
  for (std::size_t j = 0; j < m; ++j) {
    active[j] = {j, 1, singleton_mask(j)};
  }
  // Distances between active clusters, indexed by position in `active`.
  std::vector<std::vector<double>> dist(m, std::vector<double>(m, 0.0));
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      dist[a][b] = dist[b][a] = euclidean(features[a], features[b]);
    }
  }

  LinkageTree tree{m, linkage, {}};
  std::size_t next_id = m;
  while (active.size() > 1) {
    std::size_t best_a = 0, best_b = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < active.size(); ++a) {
      for (std::size_t b = a + 1; b < active.size(); ++b) {
        const double d = dist[a][b];
        // Ties by smallest (id, id) pair; active[] stays id-sorted because
        // merged clusters are appended with fresh increasing ids.
        if (d < best) {
          best = d;
          best_a = a;
          best_b = b;
        }
      }
    }

    const Cluster left = active[best_a];
    const Cluster right = active[best_b];
    Cluster merged{next_id++, left.size + right.size,
                   left.members | right.members};
    tree.merges.push_back(
        {left.id, right.id, best, merged.members, merged.size});

    // Update distances from every remaining cluster to the merge.
    std::vector<double> to_merged;
    to_merged.reserve(active.size());
    for (std::size_t k = 0; k < active.size(); ++k) {
      if (k == best_a || k == best_b) continue;
      to_merged.push_back(lance_williams(
          linkage, dist[k][best_a], dist[k][best_b], best,
          static_cast<double>(left.size), static_cast<double>(right.size),
          static_cast<double>(active[k].size)));
    }

    // Drop the two merged rows/columns (higher index first) and append the
    // merged cluster.
    auto drop = [&](std::size_t idx) {
      active.erase(active.begin() + idx);
      dist.erase(dist.begin() + idx);
      for (auto& row : dist) row.erase(row.begin() + idx);
    };
    drop(best_b);
    drop(best_a);
    active.push_back(merged);
    for (auto& row : dist) row.push_back(0.0);
    dist.emplace_back(active.size(), 0.0);
    for (std::size_t k = 0; k + 1 < active.size(); ++k) {
      dist[k][active.size() - 1] = dist[active.size() - 1][k] = to_merged[k];
    }
  }
  return tree;
}

std::vector<int> cut_assignment(const LinkageTree& tree, std::size_t k) {
  const std::size_t m = tree.leaves;
  if (k < 1 || k > m) throw std::invalid_argument("cluster count out of range");

  // Union of leaves after the first m - k merges.
  std::vector<SubsetMask> clusters;
  for (std::size_t j = 0; j < m; ++j) clusters.push_back(singleton_mask(j));
  for (std::size_t t = 0; t < m - k; ++t) {
    const SubsetMask members = tree.merges[t].members;
    SubsetMask merged = 0;
    for (auto it = clusters.begin(); it != clusters.end();) {
      if ((*it & members) != 0) {
        merged |= *it;
        it = clusters.erase(it);
      } else {
        ++it;
      }
    }
    clusters.push_back(merged);
  }

  std::vector<int> assignment(m, -1);
  // Ids in first-leaf order for determinism.
  std::sort(clusters.begin(), clusters.end(),
            [](SubsetMask a, SubsetMask b) {
              return std::countr_zero(a) < std::countr_zero(b);
            });
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (std::size_t j = 0; j < m; ++j) {
      if (subset_contains(clusters[c], j)) assignment[j] = static_cast<int>(c);
    }
  }
  return assignment;
}

namespace {

struct Scatter {
  double between = 0.0;
  double within = 0.0;
  std::size_t clusters = 0;
};

Scatter scatter(const std::vector<std::vector<double>>& features,
                const std::vector<int>& assignment) {
  const std::size_t m = features.size();
  const std::size_t dim = features.front().size();
  int k = 0;
  for (const int a : assignment) k = std::max(k, a + 1);

  std::vector<std::vector<double>> centroid(k, std::vector<double>(dim, 0.0));
  std::vector<std::size_t> count(k, 0);
  std::vector<double> grand(dim, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    ++count[assignment[j]];
    for (std::size_t t = 0; t < dim; ++t) {
      centroid[assignment[j]][t] += features[j][t];
      grand[t] += features[j][t];
    }
  }
  for (int c = 0; c < k; ++c) {
    if (count[c] == 0) {
      throw std::invalid_argument("empty cluster in CHI assignment");
    }
    for (std::size_t t = 0; t < dim; ++t) {
      centroid[c][t] /= static_cast<double>(count[c]);
    }
  }
  for (std::size_t t = 0; t < dim; ++t) grand[t] /= static_cast<double>(m);

  Scatter s;
  s.clusters = static_cast<std::size_t>(k);
  for (int c = 0; c < k; ++c) {
    double d2 = 0.0;
    for (std::size_t t = 0; t < dim; ++t) {
      const double diff = centroid[c][t] - grand[t];
      d2 += diff * diff;
    }
    s.between += static_cast<double>(count[c]) * d2;
  }
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t t = 0; t < dim; ++t) {
      const double diff = features[j][t] - centroid[assignment[j]][t];
      s.within += diff * diff;
    }
  }
  return s;
}

}  // namespace

double chi(const std::vector<std::vector<double>>& features,
           const std::vector<int>& assignment) {
  const std::size_t m = features.size();
  if (assignment.size() != m) {
    throw std::invalid_argument("assignment size != feature count");
  }
  if (m < 3) throw UndefinedIndex("CHI requires 2 <= k <= M-1");
  const Scatter s = scatter(features, assignment);
  if (s.clusters < 2 || s.clusters > m - 1) {
    throw UndefinedIndex("CHI requires 2 <= k <= M-1");
  }
  if (s.within <= 0.0) {
    throw UndefinedIndex("CHI undefined with zero within-cluster scatter");
  }
  return (s.between / static_cast<double>(s.clusters - 1)) /
         (s.within / static_cast<double>(m - s.clusters));
}

std::vector<Act> select_acts(
    const LinkageTree& tree, const std::vector<std::vector<double>>& features) {
  const std::size_t m = tree.leaves;
  if (m < 3) throw NoCandidateCut("act selection needs M >= 3 classes");

  // Pick the cut with the maximum CHI; a zero-scatter partition counts as
  // infinitely good, exact ties go to the larger k (lower threshold).
  double best_chi = -std::numeric_limits<double>::infinity();
  std::size_t best_k = 0;
  for (std::size_t k = 2; k <= m - 1; ++k) {
    const auto assignment = cut_assignment(tree, k);
    const Scatter s = scatter(features, assignment);
    double value;
    if (s.within <= 0.0) {
      if (s.between <= 0.0) continue;  // all features identical; no signal
      value = std::numeric_limits<double>::infinity();
    } else {
      value = (s.between / static_cast<double>(k - 1)) /
              (s.within / static_cast<double>(m - k));
    }
    if (value >= best_chi) {
      best_chi = value;
      best_k = k;
    }
  }
  if (best_k == 0) return {};

  const std::size_t performed = m - best_k;  // merges done at the cut
  const double threshold = tree.merges[performed - 1].height;

  std::vector<SubsetMask> selected;
  for (std::size_t t = 0; t < tree.merges.size(); ++t) {
    if (tree.merges[t].height < threshold) selected.push_back(tree.merges[t].members);
  }
  // The cut's own clusters: active member sets after `performed` merges.
  {
    std::vector<SubsetMask> clusters;
    for (std::size_t j = 0; j < m; ++j) clusters.push_back(singleton_mask(j));
    for (std::size_t t = 0; t < performed; ++t) {
      SubsetMask merged = 0;
      for (auto it = clusters.begin(); it != clusters.end();) {
        if ((*it & tree.merges[t].members) != 0) {
          merged |= *it;
          it = clusters.erase(it);
        } else {
          ++it;
        }
      }
      clusters.push_back(merged);
    }
    selected.insert(selected.end(), clusters.begin(), clusters.end());
  }

  const SubsetMask omega =
      m == 64 ? ~SubsetMask{0} : (SubsetMask{1} << m) - 1;
  std::vector<Act> acts;
  for (const SubsetMask s : selected) {
    if (subset_size(s) >= 2 && s != omega) acts.push_back(Act{s});
  }
  std::sort(acts.begin(), acts.end(), [](const Act& a, const Act& b) {
    return act_less(a.members, b.members);
  });
  acts.erase(std::unique(acts.begin(), acts.end()), acts.end());
  return acts;
}

void write_dendrogram_csv(const LinkageTree& tree, std::ostream& out) {
  out << "left,right,height,size\n";
  char buf[32];
  for (const Merge& merge : tree.merges) {
    std::snprintf(buf, sizeof buf, "%.17g", merge.height);
    out << merge.left << ',' << merge.right << ',' << buf << ',' << merge.size
        << '\n';
  }
}

}  // namespace evd
