#pragma once

#include <map>
#include <span>
#include <vector>

#include "evd/frame.hpp"

namespace evd {

// Tolerance for "masses sum to one" checks.
inline constexpr double kMassTolerance = 1e-9;
// Masses below this after a combination are clamped to zero to stop
// denormal drift in long combination chains.
inline constexpr double kMassClamp = 1e-15;

// Mass function with arbitrary focal sets (no mass on the empty set).
struct GeneralMassFunction {
  FramePtr frame;
  std::map<SubsetMask, double> focal;

  double mass(SubsetMask subset) const {
    const auto it = focal.find(subset);
    return it == focal.end() ? 0.0 : it->second;
  }
};

// The restricted form produced by the DS layer: mass on the M singletons
// plus the whole frame.
struct MassVector {
  FramePtr frame;
  std::vector<double> singletons;  // size M
  double omega = 0.0;

  double sum() const;
};

// Validated constructors; throw std::invalid_argument on bad input.
GeneralMassFunction make_mass(FramePtr frame,
                              std::map<SubsetMask, double> focal);
MassVector make_mass_vector(FramePtr frame, std::vector<double> singletons,
                            double omega);

GeneralMassFunction vacuous(FramePtr frame);
GeneralMassFunction to_general(const MassVector& m);

bool is_normalized(const GeneralMassFunction& m);
bool is_normalized(const MassVector& m);

// Dempster's rule: conjunctive combination then renormalization by
// 1 - conflict. Throws TotalConflict when the sources fully contradict.
GeneralMassFunction combine_dempster(const GeneralMassFunction& m1,
                                     const GeneralMassFunction& m2);

// Generalized Hurwicz expected utility of one act: nu * lower + (1 - nu)
// * upper, where each focal set contributes its min (resp. max) utility
// over the act's per-class utility row.
double hurwicz_expectation(const GeneralMassFunction& m,
                           std::span<const double> act_utilities, double nu);
double hurwicz_expectation(const MassVector& m,
                           std::span<const double> act_utilities, double nu);

double lower_expectation(const GeneralMassFunction& m,
                         std::span<const double> act_utilities);
double upper_expectation(const GeneralMassFunction& m,
                         std::span<const double> act_utilities);

}  // namespace evd
