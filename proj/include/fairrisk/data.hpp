#pragma once

// Dataset ingestion, the synthetic benchmark, splitting and standardisation.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fairrisk/subgroup.hpp"

namespace fairrisk {

enum class SensitiveKind { Categorical, Real };

struct CsvSchema {
    std::string label_column;
    /// Several columns are combined into one categorical key "a|b|...".
    std::vector<std::string> sensitive_columns;
    std::string positive_label_token;
    SensitiveKind sensitive_kind = SensitiveKind::Categorical;
    /// Empty means every column other than the label.
    std::vector<std::string> feature_columns;
    bool sensitive_as_feature = true;
};

/// Splits CSV text into records. Header row first. Supports quoted fields
/// with doubled quotes; unquoted fields are trimmed of surrounding blanks.
std::vector<std::vector<std::string>> parse_csv(std::istream& in);

/**
 * Builds a Dataset from CSV text. Numeric columns (first value parses as a
 * number) are copied; other feature columns are one-hot encoded with
 * categories in first-appearance order. InputError names the row and column
 * of any missing or unparseable value.
 */
Dataset load_csv(std::istream& in, const CsvSchema& schema);
Dataset load_csv(const std::string& path, const CsvSchema& schema);

/// Writes the feature matrix with full round-trip precision.
void write_feature_csv(std::ostream& out, const Dataset& data);

struct SynthSpec {
    std::size_t m = 1000;
    std::array<double, 2> group_fractions{0.5, 0.5};
    /// class_means[group][0] for y = -1, [1] for y = +1.
    std::array<std::array<std::array<double, 2>, 2>, 2> class_means{{
        {{{-2.0, 0.0}, {2.0, 0.0}}},
        {{{0.0, -0.5}, {0.0, 0.5}}},
    }};
    std::array<double, 2> noise_rates{0.05, 0.25};
    std::uint64_t seed = 0;

    void validate() const;
};

/// Two groups, two Gaussian features, group-dependent label noise.
/// Deterministic in spec.seed.
Dataset generate_synth(const SynthSpec& spec);

struct SplitResult {
    Dataset train;
    Dataset test;
    /// False when some group had fewer than two rows and a plain shuffle was used.
    bool stratified = true;
};

/// Stratified by (label, group) when every group has at least two rows.
SplitResult split(const Dataset& data, double train_fraction, std::uint64_t seed);

struct Scaler {
    std::vector<double> means;
    std::vector<double> stds;  ///< 0 marks a column passed through unchanged

    static Scaler fit(const Dataset& data);
    Dataset apply(const Dataset& data) const;
};

struct StandardizeResult {
    Dataset train;
    Dataset test;
    Scaler scaler;
};

/// Fits on train only and applies to both.
StandardizeResult standardize(const Dataset& train, const Dataset& test);

}  // namespace fairrisk
