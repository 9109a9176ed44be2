#pragma once

// Datasets with a sensitive feature, group partitions, base losses and the
// empirical subgroup risk random variable.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fairrisk/riskvar.hpp"

namespace fairrisk {

/// Dense row-major matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const {
        return std::span<const double>(data_).subspan(r * cols_, cols_);
    }
    std::span<double> row(std::size_t r) { return std::span<double>(data_).subspan(r * cols_, cols_); }

    const std::vector<double>& data() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Sensitive values given as category codes. `names[c]` labels code c when
/// the data came from a file; it may be empty.
struct CategoricalSensitive {
    std::vector<int> codes;
    std::vector<std::string> names;
    friend bool operator==(const CategoricalSensitive&, const CategoricalSensitive&) = default;
};

struct RealSensitive {
    std::vector<double> values;
    friend bool operator==(const RealSensitive&, const RealSensitive&) = default;
};

using SensitiveColumn = std::variant<CategoricalSensitive, RealSensitive>;

/**
 * Labelled sample with one sensitive value per row.
 *
 * `group_weighting` optionally replaces the empirical group distribution;
 * its keys are category codes and must match the observed codes exactly.
 */
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    SensitiveColumn sensitive;
    std::optional<std::map<int, double>> group_weighting;
    std::vector<std::string> feature_names;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t dims() const noexcept { return features.cols(); }
    bool has_categorical_sensitive() const {
        return std::holds_alternative<CategoricalSensitive>(sensitive);
    }
    /// Sensitive values as reals (category codes cast to double).
    std::vector<double> sensitive_as_real() const;

    /// Throws InputError on shape mismatches, labels outside {-1,+1},
    /// non-finite features, or a malformed group weighting.
    void validate() const;

    /// Rows `idx` in order; keeps the sensitive representation and weighting.
    Dataset subset(std::span<const std::size_t> idx) const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

enum class PartitionMode { Categorical, PerInstance };

std::string_view to_string(PartitionMode mode);

struct GroupPartition {
    std::vector<std::size_t> group_ids;  ///< length m, values in [0, n)
    std::vector<std::size_t> group_sizes;
    std::vector<double> group_probs;
    /// Category code of each group in categorical mode; empty otherwise.
    std::vector<int> group_codes;

    std::size_t num_groups() const noexcept { return group_sizes.size(); }
};

/// Groups are numbered in order of first appearance.
GroupPartition partition(const Dataset& data, PartitionMode mode);

struct LinearModel {
    std::vector<double> weights;
    double intercept = 0.0;

    static LinearModel zeros(std::size_t dims) { return {std::vector<double>(dims, 0.0), 0.0}; }
    double score(std::span<const double> x) const;
    friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

std::vector<double> scores(const LinearModel& model, const Dataset& data);

enum class LossKind { ZeroOne, Hinge, SquaredHinge, Logistic, Linear };

std::string_view to_string(LossKind kind);
LossKind parse_loss(std::string_view name);

/// ZeroOne is evaluation-only; the others are convex in the score.
bool is_convex(LossKind kind);

double loss_value(LossKind kind, int label, double score);
/// d loss / d score (a subgradient at kinks). ParameterError for ZeroOne.
double loss_derivative(LossKind kind, int label, double score);

/// Atoms (mean loss of group s, group_probs[s]) in group order.
DiscreteRandomVariable subgroup_risks(const LinearModel& model, const Dataset& data,
                                      const GroupPartition& groups, LossKind loss);

/// Expected subgroup risk under the partition's group distribution.
double weighted_risk(const LinearModel& model, const Dataset& data, const GroupPartition& groups,
                     LossKind loss);

/// Per-instance margins -y * score, each with probability 1/m.
DiscreteRandomVariable margins(const LinearModel& model, const Dataset& data);

}  // namespace fairrisk
