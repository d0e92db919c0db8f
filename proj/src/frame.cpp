#include "evd/frame.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace evd {

Frame::Frame(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) {
    throw std::invalid_argument("frame needs at least 2 classes");
  }
  if (labels_.size() > 64) {
    throw std::invalid_argument("frame is capped at 64 classes");
  }
  std::unordered_set<std::string> seen;
  for (const auto& l : labels_) {
    if (l.empty()) throw std::invalid_argument("empty class label");
    if (!seen.insert(l).second) {
      throw std::invalid_argument("duplicate class label: " + l);
    }
  }
}

std::size_t Frame::index_of(const std::string& label) const {
  for (std::size_t j = 0; j < labels_.size(); ++j) {
    if (labels_[j] == label) return j;
  }
  throw std::invalid_argument("label not in frame: " + label);
}

bool Frame::has_label(const std::string& label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

std::string Frame::subset_name(SubsetMask subset) const {
  std::string out;
  for (std::size_t j = 0; j < labels_.size(); ++j) {
    if (!subset_contains(subset, j)) continue;
    if (!out.empty()) out += '+';
    out += labels_[j];
  }
  return out;
}

SubsetMask Frame::subset_from_name(const std::string& name) const {
  SubsetMask mask = 0;
  std::size_t start = 0;
  while (start <= name.size()) {
    const std::size_t plus = name.find('+', start);
    const std::size_t end = plus == std::string::npos ? name.size() : plus;
    mask |= singleton_mask(index_of(name.substr(start, end - start)));
    if (plus == std::string::npos) break;
    start = plus + 1;
  }
  return mask;
}

FramePtr make_frame(std::vector<std::string> labels) {
  return std::make_shared<const Frame>(std::move(labels));
}

}  // namespace evd
