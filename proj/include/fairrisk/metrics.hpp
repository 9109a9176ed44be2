#pragma once

// Post-hoc accuracy and fairness metrics. None of these enter training.

#include <optional>
#include <span>
#include <vector>

#include "fairrisk/riskvar.hpp"
#include "fairrisk/subgroup.hpp"

namespace fairrisk {

/// sign(score) with sign(0) = +1.
std::vector<int> predictions(const LinearModel& model, const Dataset& data);

/// Per-group 0-1 error rates, in partition group order.
std::vector<double> subgroup_error_rates(std::span<const int> predictions, std::span<const int> labels,
                                         const GroupPartition& groups);

/// |err_0 - err_1| for a two-group partition.
double mean_difference_01(std::span<const int> predictions, std::span<const int> labels,
                          const GroupPartition& groups);

/// Largest gap between groups in the empirical rate of any prediction value.
double dp_violation(std::span<const int> predictions, const GroupPartition& groups);

/// Empirical E[A S] - E[A] E[S].
double covariance_metric(std::span<const double> a, std::span<const double> s);

/// Plug-in mutual information (nats) between predictions and group membership.
double mutual_information_metric(std::span<const int> predictions, const GroupPartition& groups);

/// Fraction of (positive, negative) pairs the scores rank wrongly, ties
/// counting one half; one minus the ROC AUC.
double pairwise_disagreement(std::span<const double> scores, std::span<const int> labels);

/// Range of the positive-probability atoms.
double subgroup_loss_gap(const DiscreteRandomVariable& risks);

struct EvaluationReport {
    double zero_one_risk = 0.0;
    std::vector<double> subgroup_zero_one;
    std::optional<double> mean_difference;  ///< two-group partitions only
    double dp_violation = 0.0;
    double covariance = 0.0;
    double mutual_information_nats = 0.0;
    std::optional<double> pairwise_disagreement;  ///< needs both classes
    double subgroup_loss_gap = 0.0;               ///< of `loss` subgroup risks
    double weighted_risk = 0.0;                   ///< of `loss`
};

EvaluationReport evaluate(const LinearModel& model, const Dataset& data, const GroupPartition& groups,
                          LossKind loss);

}  // namespace fairrisk
