#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "evd/decision.hpp"
#include "evd/frame.hpp"

namespace evd {

// Confusion matrix of precise assignments: rows = predicted class (act),
// columns = true class.
struct ConfusionMatrix {
  FramePtr frame;
  std::vector<std::int64_t> counts;  // M x M

  std::int64_t at(std::size_t act, std::size_t truth) const {
    return counts[act * frame->size() + truth];
  }
};

// Builds the matrix from singleton decisions; throws std::invalid_argument
// if any decision is set-valued.
ConfusionMatrix confusion_matrix(const std::vector<Decision>& decisions,
                                 const std::vector<int>& labels,
                                 FramePtr frame);

// Column-normalized confusion columns: feature j is the j-th column divided
// by its sum. Throws EmptyColumn on an all-zero column.
std::vector<std::vector<double>> normalize_columns(const ConfusionMatrix& cm);

enum class Linkage { Single, Complete, Average, Ward };

Linkage linkage_from_name(const std::string& name);
std::string linkage_name(Linkage l);

struct Merge {
  std::size_t left = 0;   // cluster ids; leaves are 0..M-1, merges M..2M-2
  std::size_t right = 0;
  double height = 0.0;
  SubsetMask members = 0;
  std::size_t size = 0;
};

struct LinkageTree {
  std::size_t leaves = 0;
  Linkage linkage = Linkage::Ward;
  std::vector<Merge> merges;  // M-1 merges, non-decreasing heights
};

// Agglomerative clustering of the class-feature columns under Euclidean
// distance, Lance-Williams updates, deterministic smallest-index-pair tie
// breaking. Ward uses the plain Euclidean distance between singletons, so
// first merge heights read directly as distances.
LinkageTree hac(const std::vector<std::vector<double>>& features,
                Linkage linkage);

// Cluster assignment (one id per leaf, ids 0..k-1 in first-leaf order)
// after cutting the tree to k clusters.
std::vector<int> cut_assignment(const LinkageTree& tree, std::size_t k);

// Calinski-Harabasz index of a k-cluster assignment of the features.
// Throws UndefinedIndex for k < 2, k > M-1 or zero within-cluster scatter.
double chi(const std::vector<std::vector<double>>& features,
           const std::vector<int>& assignment);

// The act-selection procedure: CHI is evaluated at every cut k = 2..M-1,
// the threshold is the merge height of the CHI-maximizing cut, and the
// selected acts are the member sets of all merges strictly below the
// threshold plus the clusters of the cut itself. Throws NoCandidateCut
// when M < 3.
std::vector<Act> select_acts(const LinkageTree& tree,
                             const std::vector<std::vector<double>>& features);

// Merge table as CSV (left, right, height, size) for external plotting.
void write_dendrogram_csv(const LinkageTree& tree, std::ostream& out);

}  // namespace evd
