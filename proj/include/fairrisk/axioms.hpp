#pragma once

// Sampling falsifiers for the fairness risk measure axioms.
//
//   F1 convexity            F2 positive homogeneity   F3 monotonicity
//   F4 lower semicontinuity F5 translation invariance F6 aversity
//   F7 law invariance       F8 translation equivariance on constants
//   F9 positivity of the induced deviation under non-constancy
//
// F4 is checked as continuity along sampled line segments.

#include <cstdint>
#include <string_view>

#include "fairrisk/falsification.hpp"
#include "fairrisk/riskvar.hpp"

namespace fairrisk {

enum class FairnessAxiom { F1, F2, F3, F4, F5, F6, F7, F8, F9 };

inline constexpr FairnessAxiom kAllFairnessAxioms[] = {
    FairnessAxiom::F1, FairnessAxiom::F2, FairnessAxiom::F3, FairnessAxiom::F4, FairnessAxiom::F5,
    FairnessAxiom::F6, FairnessAxiom::F7, FairnessAxiom::F8, FairnessAxiom::F9};

std::string_view to_string(FairnessAxiom axiom);

/// Parses "F1".."F9"; ParameterError otherwise.
FairnessAxiom parse_fairness_axiom(std::string_view tag);

/// Relative tolerance for equalities, and slack (scaled by max(1, |values|))
/// for inequalities.
inline constexpr double kAxiomTolerance = 1e-9;

/**
 * Tries to falsify `axiom` for the aggregator `measure` on `trials` random
 * pairs of discrete random variables sharing a sample space and probability
 * vector. Stops at the first violation. Deterministic in `seed`.
 */
FalsificationReport check_axiom(const AggregatorSpec& measure, FairnessAxiom axiom,
                                std::size_t trials, std::uint64_t seed);

}  // namespace fairrisk
