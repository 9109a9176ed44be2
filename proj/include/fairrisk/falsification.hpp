#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fairrisk {

/// Inputs that violated an axiom check. `z` and `z_prime` share the
/// probability vector `probs`; `z_prime` is empty for single-variable axioms.
struct Counterexample {
    std::vector<double> probs;
    std::vector<double> z;
    std::vector<double> z_prime;
    std::map<std::string, double> parameters;
    double lhs = 0.0;
    double rhs = 0.0;
    std::string relation;
};

/// Outcome of a falsification-by-sampling run. `passed` means no sampled
/// input violated the axiom, not that the axiom holds.
struct FalsificationReport {
    std::string axiom;
    std::string measure;
    bool passed = true;
    std::size_t trials_run = 0;
    std::optional<Counterexample> counterexample;
};

}  // namespace fairrisk
