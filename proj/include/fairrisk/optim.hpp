#pragma once

// Subgradient training of linear models against aggregated subgroup risks.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairrisk/riskvar.hpp"
#include "fairrisk/subgroup.hpp"

namespace fairrisk {

enum class StepDecay { Constant, InvSqrt };

struct TrainConfig {
    AggregatorSpec aggregator;
    LossKind loss = LossKind::SquaredHinge;
    double l2_reg = 1e-4;
    std::size_t epochs = 300;
    double step_size = 0.5;
    StepDecay step_decay = StepDecay::InvSqrt;
    std::uint64_t seed = 0;
    PartitionMode partition_mode = PartitionMode::Categorical;

    /// ParameterError for a non-convex loss, zero epochs, bad step or
    /// regularisation, or an invalid aggregator.
    void validate() const;
};

struct TrainReport {
    LinearModel model;  ///< best iterate
    std::optional<double> rho;
    std::vector<double> objective_trace;  ///< objective at the start of each epoch
    std::size_t best_epoch = 0;
    DiscreteRandomVariable final_subgroup_risks = DiscreteRandomVariable::constant(0.0);
    std::map<std::string, double> metrics;
    /// Set for aggregators without convexity guarantees (SD penalty).
    bool baseline = false;
};

/// Gradient of a training objective over (weights, intercept) and, for the
/// CVaR objective, rho.
struct Subgradient {
    std::vector<double> weights;
    double intercept = 0.0;
    double rho = 0.0;
};

/**
 * Empirical CVaR objective for a fixed threshold:
 *   rho + 1/(1-alpha) * sum_s p_s [L_s(f) - rho]_+  +  l2_reg/2 * |w|^2
 * where L_s are the subgroup risks and p_s the partition's group probabilities.
 */
double cvar_objective(const LinearModel& model, double rho, const Dataset& data,
                      const GroupPartition& groups, LossKind loss, double alpha, double l2_reg = 0.0);

/// Subgradient of cvar_objective. Groups with risk exactly at rho contribute 0.
Subgradient subgradient(const LinearModel& model, double rho, const Dataset& data,
                        const GroupPartition& groups, LossKind loss, double alpha, double l2_reg = 0.0);

/// Training objective R(L(f)) + l2_reg/2 |w|^2. For CVaR this is the minimum
/// over rho, i.e. cvar of the subgroup risks.
double aggregator_objective(const LinearModel& model, const Dataset& data, const GroupPartition& groups,
                            LossKind loss, const AggregatorSpec& aggregator, double l2_reg = 0.0);

/// Partition a config trains on: per-instance for TopK, else config.partition_mode.
GroupPartition training_partition(const TrainConfig& config, const Dataset& data);

/**
 * Full-batch subgradient descent from the zero model. The CVaR path sets rho
 * to the alpha-quantile of the current subgroup risks before every step;
 * TopK runs the CVaR path on per-instance groups with alpha = 1 - k/m.
 * Returns the best iterate seen. NumericalError on a non-finite objective.
 */
TrainReport train(const TrainConfig& config, const Dataset& data);

/// One train() per alpha with a CVaR aggregator, sorted by alpha. Runs in
/// parallel; results do not depend on scheduling.
std::vector<TrainReport> alpha_sweep(const TrainConfig& config_template, const Dataset& data,
                                     std::span<const double> alphas);

}  // namespace fairrisk
