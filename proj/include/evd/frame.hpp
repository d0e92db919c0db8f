#pragma once

#include <bit>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace evd {

// Subsets of the frame are bitmasks over label indices (bit j <=> class j).
// The frame size is capped at 64 so every act fits in one word.
using SubsetMask = std::uint64_t;

inline int subset_size(SubsetMask m) { return std::popcount(m); }
inline bool subset_contains(SubsetMask m, std::size_t j) {
  return (m >> j) & 1u;
}
inline SubsetMask singleton_mask(std::size_t j) {
  return SubsetMask{1} << j;
}

// Frame of discernment: the ordered set of mutually exclusive class labels.
class Frame {
 public:
  explicit Frame(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(std::size_t j) const { return labels_[j]; }
  // Throws std::invalid_argument for labels outside the frame.
  std::size_t index_of(const std::string& label) const;
  bool has_label(const std::string& label) const;

  SubsetMask omega() const {
    const std::size_t m = labels_.size();
    return m == 64 ? ~SubsetMask{0} : (SubsetMask{1} << m) - 1;
  }

  // Human-readable '+'-joined subset name, e.g. "cat+dog".
  std::string subset_name(SubsetMask subset) const;
  // Inverse of subset_name; throws std::invalid_argument on unknown labels.
  SubsetMask subset_from_name(const std::string& name) const;

  friend bool operator==(const Frame& a, const Frame& b) {
    return a.labels_ == b.labels_;
  }

 private:
  std::vector<std::string> labels_;
};

using FramePtr = std::shared_ptr<const Frame>;

FramePtr make_frame(std::vector<std::string> labels);

}  // namespace evd
