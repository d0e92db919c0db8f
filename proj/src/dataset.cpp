#include "evd/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "evd/rng.hpp"

namespace evd {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

Dataset read_dataset_csv(std::istream& in, FramePtr frame) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument("dataset CSV: missing header");
  }
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header.back() != "label") {
    throw std::invalid_argument("dataset CSV: header must be f0..fN,label");
  }
  const std::size_t dim = header.size() - 1;

  std::vector<std::vector<double>> rows;
  std::vector<std::string> raw_labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != dim + 1) {
      throw std::invalid_argument("dataset CSV: wrong column count at line " +
                                  std::to_string(line_no));
    }
    std::vector<double> row(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      row[k] = std::stod(cells[k]);
      if (!std::isfinite(row[k])) {
        throw std::invalid_argument("dataset CSV: non-finite value at line " +
                                    std::to_string(line_no));
      }
    }
    rows.push_back(std::move(row));
    raw_labels.push_back(cells.back());
  }

  if (!frame) {
    std::set<std::string> unique;
    for (const auto& l : raw_labels) {
      if (l != kOutlierLabel) unique.insert(l);
    }
    frame = make_frame({unique.begin(), unique.end()});
  }

  Dataset data;
  data.frame = frame;
  data.dim = dim;
  data.rows = std::move(rows);
  data.labels.reserve(raw_labels.size());
  for (const auto& l : raw_labels) {
    if (l == kOutlierLabel) {
      data.labels.push_back(-1);
    } else {
      data.labels.push_back(static_cast<int>(frame->index_of(l)));
    }
  }
  return data;
}

Dataset read_dataset_csv_file(const std::string& path, FramePtr frame) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open dataset file: " + path);
  return read_dataset_csv(in, std::move(frame));
}

void write_dataset_csv(const Dataset& data, std::ostream& out) {
  for (std::size_t k = 0; k < data.dim; ++k) {
    out << 'f' << k << ',';
  }
  out << "label\n";
  char buf[32];
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t k = 0; k < data.dim; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", data.rows[i][k]);
      out << buf << ',';
    }
    out << (data.labels[i] < 0 ? kOutlierLabel
                               : data.frame->label(data.labels[i]))
        << '\n';
  }
}

void write_dataset_csv_file(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open output file: " + path);
  write_dataset_csv(data, out);
}

Dataset make_blobs(std::size_t classes, std::size_t per_class,
                   std::size_t dims, double separation, double stddev,
                   std::size_t outliers, std::uint64_t seed) {
  if (classes < 2) throw std::invalid_argument("need at least 2 classes");
  if (dims < 2) throw std::invalid_argument("need at least 2 dimensions");
  if (!(separation > 0.0) || !(stddev > 0.0)) {
    throw std::invalid_argument("separation and stddev must be positive");
  }

  std::vector<std::string> labels;
  for (std::size_t c = 0; c < classes; ++c) {
    labels.push_back("c" + std::to_string(c));
  }

  Dataset data;
  data.frame = make_frame(std::move(labels));
  data.dim = dims;

  const double pi = 3.14159265358979323846;
  // Adjacent means sit `separation * stddev` apart on the circle.
  const double radius =
      separation * stddev / (2.0 * std::sin(pi / static_cast<double>(classes)));

  Rng rng(seed);
  for (std::size_t c = 0; c < classes; ++c) {
    const double angle = 2.0 * pi * static_cast<double>(c) /
                         static_cast<double>(classes);
    for (std::size_t r = 0; r < per_class; ++r) {
      std::vector<double> row(dims, 0.0);
      row[0] = radius * std::cos(angle);
      row[1] = radius * std::sin(angle);
      for (std::size_t k = 0; k < dims; ++k) row[k] += stddev * rng.normal();
      data.rows.push_back(std::move(row));
      data.labels.push_back(static_cast<int>(c));
    }
  }

  const double envelope = radius + 3.0 * stddev;
  const double shell = envelope + 3.0 * separation * stddev;
  for (std::size_t o = 0; o < outliers; ++o) {
    std::vector<double> direction(dims);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& v : direction) {
        v = rng.normal();
        norm += v * v;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    std::vector<double> row(dims);
    for (std::size_t k = 0; k < dims; ++k) row[k] = shell * direction[k] / norm;
    data.rows.push_back(std::move(row));
    data.labels.push_back(-1);
  }
  return data;
}

}  // namespace evd
