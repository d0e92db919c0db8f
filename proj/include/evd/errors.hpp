#pragma once

#include <stdexcept>

namespace evd {

// Dempster combination denominator is zero: the two sources fully contradict.
struct TotalConflict : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Normalizing sum of the combined prototype masses underflowed to zero.
struct DegenerateNormalizer : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A forward trace was paired with an input/bank it was not produced from.
struct TraceMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InsufficientSamples : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CatalogTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DivergenceDetected : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyColumn : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UndefinedIndex : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoCandidateCut : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace evd
