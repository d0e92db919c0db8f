#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "evd/frame.hpp"

namespace evd {

// Reserved label token marking out-of-frame (novelty) rows.
inline constexpr const char* kOutlierLabel = "__OUTLIER__";

// Flat feature rows plus labels; label -1 marks an outlier row.
struct Dataset {
  FramePtr frame;
  std::size_t dim = 0;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;

  std::size_t size() const { return rows.size(); }
  bool is_outlier(std::size_t i) const { return labels[i] < 0; }
};

// CSV with header f0..f{P-1},label. When `frame` is null the frame is
// inferred from the sorted set of labels present (outlier token excluded).
Dataset read_dataset_csv(std::istream& in, FramePtr frame = nullptr);
Dataset read_dataset_csv_file(const std::string& path, FramePtr frame = nullptr);

void write_dataset_csv(const Dataset& data, std::ostream& out);
void write_dataset_csv_file(const Dataset& data, const std::string& path);

// Isotropic Gaussian blobs: class means equally spaced on a circle in the
// first two dimensions with adjacent-mean distance separation * stddev;
// outliers are drawn uniformly on a shell of radius 3 * separation * stddev
// beyond the blob envelope and labeled with the outlier token.
Dataset make_blobs(std::size_t classes, std::size_t per_class,
                   std::size_t dims, double separation, double stddev,
                   std::size_t outliers, std::uint64_t seed);

}  // namespace evd
