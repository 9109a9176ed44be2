#pragma once

// Command-line front end: train, sweep, axioms.
//
// Exit codes: 0 success, 2 bad flags or parameters, 3 ingestion failure,
// 4 numerical failure, 5 axiom results differ from the expectation table.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace fairrisk::cli {

inline constexpr std::string_view kToolName = "fairrisk";
inline constexpr std::string_view kVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIngestion = 3;
inline constexpr int kExitNumerical = 4;
inline constexpr int kExitAxiomMismatch = 5;

/// Header row written by `sweep`.
inline constexpr std::string_view kSweepHeader =
    "alpha,risk,subgroup_gap,dp_violation,mean_difference,pairwise_disagreement";

/// `args` excludes the program name. Results go to `out` unless --output is
/// given; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fairrisk::cli
