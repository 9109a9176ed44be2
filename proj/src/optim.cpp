#include "fairrisk/optim.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <sstream>

#include "fairrisk/errors.hpp"
#include "fairrisk/numeric.hpp"

namespace fairrisk {

namespace {

constexpr double kMaxTieTol = 1e-12;

double half_squared_norm(const std::vector<double>& w) {
    double s = 0.0;
    for (double x : w) s += x * x;
    return 0.5 * s;
}

/// Per-row scores and per-group mean losses for one model.
struct Evaluation {
    std::vector<double> scores;
    std::vector<double> risks;

    DiscreteRandomVariable risk_variable(const GroupPartition& groups) const {
        return DiscreteRandomVariable::from_columns(risks, groups.group_probs);
    }
};

Evaluation evaluate_model(const LinearModel& model, const Dataset& data, const GroupPartition& groups,
                          LossKind loss) {
    if (groups.group_ids.size() != data.size()) {
        throw ParameterError("partition does not match the dataset");
    }
    Evaluation e;
    e.scores = scores(model, data);
    std::vector<detail::CompensatedSum> sums(groups.num_groups());
    for (std::size_t j = 0; j < data.size(); ++j) {
        sums[groups.group_ids[j]].add(loss_value(loss, data.labels[j], e.scores[j]));
    }
    e.risks.resize(groups.num_groups());
    for (std::size_t g = 0; g < e.risks.size(); ++g) {
        e.risks[g] = sums[g].value() / static_cast<double>(groups.group_sizes[g]);
    }
    return e;
}

/// d objective / d L_s for each group s at the given risks. With
/// `split_ties`, CVaR groups sitting exactly at rho share the tail mass left
/// over by the groups above it, which keeps the rho component of the joint
/// subgradient at zero when rho is the exact quantile.
std::vector<double> group_coefficients(const std::vector<double>& risks, const GroupPartition& groups,
                                       const AggregatorSpec& agg, double rho, bool split_ties) {
    const std::size_t n = risks.size();
    const auto& p = groups.group_probs;
    std::vector<double> c(n, 0.0);
    switch (agg.kind) {
        case AggregatorKind::Expectation:
            c = p;
            break;
        case AggregatorKind::CVaR: {
            const double scale = 1.0 / (1.0 - agg.alpha);
            double above = 0.0, tied = 0.0;
            for (std::size_t s = 0; s < n; ++s) {
                if (risks[s] > rho) {
                    c[s] = p[s] * scale;
                    above += p[s];
                } else if (risks[s] == rho) {
                    tied += p[s];
                }
            }
            if (split_ties && tied > 0.0) {
                const double left = std::max(0.0, (1.0 - agg.alpha) - above) / (1.0 - agg.alpha);
                for (std::size_t s = 0; s < n; ++s) {
                    if (risks[s] == rho) c[s] = left * (p[s] / tied);
                }
            }
            break;
        }
        case AggregatorKind::SDPenalty: {
            const auto z = DiscreteRandomVariable::from_columns(risks, p);
            const double mean = expectation(z);
            const double sigma = sd_deviation(z);
            for (std::size_t s = 0; s < n; ++s) {
                c[s] = p[s];
                if (sigma > 0.0) c[s] += agg.lambda * p[s] * (risks[s] - mean) / sigma;
            }
            break;
        }
        case AggregatorKind::Max: {
            const double top = *std::max_element(risks.begin(), risks.end());
            std::size_t ties = 0;
            for (double r : risks) ties += (top - r <= kMaxTieTol) ? 1 : 0;
            for (std::size_t s = 0; s < n; ++s) {
                if (top - risks[s] <= kMaxTieTol) c[s] = 1.0 / static_cast<double>(ties);
            }
            break;
        }
        case AggregatorKind::TopK:
            throw ParameterError("top-k is trained through its CVaR form");
    }
    return c;
}

/// Chain rule from group coefficients down to (weights, intercept).
Subgradient backprop(const std::vector<double>& coeffs, const Evaluation& e, const LinearModel& model,
                     const Dataset& data, const GroupPartition& groups, LossKind loss, double l2_reg) {
    Subgradient g;
    g.weights.assign(data.dims(), 0.0);
    for (std::size_t j = 0; j < data.size(); ++j) {
        const std::size_t s = groups.group_ids[j];
        if (coeffs[s] == 0.0) continue;
        const double d = coeffs[s] / static_cast<double>(groups.group_sizes[s]) *
                         loss_derivative(loss, data.labels[j], e.scores[j]);
        if (d == 0.0) continue;
        const auto x = data.features.row(j);
        for (std::size_t i = 0; i < x.size(); ++i) g.weights[i] += d * x[i];
        g.intercept += d;
    }
    for (std::size_t i = 0; i < g.weights.size(); ++i) g.weights[i] += l2_reg * model.weights[i];
    return g;
}

void require_convex(LossKind loss) {
    if (!is_convex(loss)) {
        throw ParameterError("training needs a convex loss; " + std::string(to_string(loss)) +
                             " is evaluation-only");
    }
}

/// The aggregator train() actually optimises: TopK becomes CVaR at
/// alpha = 1 - k/m, or the plain mean when k = m.
AggregatorSpec effective_aggregator(const AggregatorSpec& agg, std::size_t m) {
    if (agg.kind != AggregatorKind::TopK) return agg;
    if (agg.k > m) {
        std::ostringstream msg;
        msg << "top-k needs k <= m = " << m << ", got k=" << agg.k;
        throw ParameterError(msg.str());
    }
    if (agg.k == m) return AggregatorSpec::expectation();
    return AggregatorSpec::cvar(1.0 - static_cast<double>(agg.k) / static_cast<double>(m));
}

}  // namespace

void TrainConfig::validate() const {
    aggregator.validate();
    require_convex(loss);
    if (epochs < 1) throw ParameterError("epochs must be >= 1");
    if (!(step_size > 0.0) || !std::isfinite(step_size)) throw ParameterError("step size must be > 0");
    if (!(l2_reg >= 0.0) || !std::isfinite(l2_reg)) throw ParameterError("l2 regularisation must be >= 0");
}

double cvar_objective(const LinearModel& model, double rho, const Dataset& data,
                      const GroupPartition& groups, LossKind loss, double alpha, double l2_reg) {
    const auto e = evaluate_model(model, data, groups, loss);
    return cvar_variational(e.risk_variable(groups), alpha, rho) + l2_reg * half_squared_norm(model.weights);
}

Subgradient subgradient(const LinearModel& model, double rho, const Dataset& data,
                        const GroupPartition& groups, LossKind loss, double alpha, double l2_reg) {
    require_convex(loss);
    const auto agg = AggregatorSpec::cvar(alpha);
    const auto e = evaluate_model(model, data, groups, loss);
    const auto coeffs = group_coefficients(e.risks, groups, agg, rho, false);
    auto g = backprop(coeffs, e, model, data, groups, loss, l2_reg);
    double active_mass = 0.0;
    for (std::size_t s = 0; s < e.risks.size(); ++s) {
        if (e.risks[s] > rho) active_mass += groups.group_probs[s];
    }
    g.rho = 1.0 - active_mass / (1.0 - alpha);
    return g;
}

double aggregator_objective(const LinearModel& model, const Dataset& data, const GroupPartition& groups,
                            LossKind loss, const AggregatorSpec& aggregator, double l2_reg) {
    const auto e = evaluate_model(model, data, groups, loss);
    return aggregate(e.risk_variable(groups), aggregator) + l2_reg * half_squared_norm(model.weights);
}

GroupPartition training_partition(const TrainConfig& config, const Dataset& data) {
    const PartitionMode mode =
        config.aggregator.kind == AggregatorKind::TopK ? PartitionMode::PerInstance : config.partition_mode;
    return partition(data, mode);
}

TrainReport train(const TrainConfig& config, const Dataset& data) {
    config.validate();
    data.validate();
    const GroupPartition groups = training_partition(config, data);
    const AggregatorSpec agg = effective_aggregator(config.aggregator, data.size());
    const bool uses_rho = agg.kind == AggregatorKind::CVaR;

    TrainReport report;
    report.baseline = config.aggregator.kind == AggregatorKind::SDPenalty;
    report.objective_trace.reserve(config.epochs);

    LinearModel model = LinearModel::zeros(data.dims());
    LinearModel best_model = model;
    double best_objective = 0.0;
    double best_rho = 0.0;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto e = evaluate_model(model, data, groups, config.loss);
        const auto bad = std::find_if(e.risks.begin(), e.risks.end(), [](double r) { return !std::isfinite(r); });
        if (bad != e.risks.end() || !std::isfinite(half_squared_norm(model.weights))) {
            report.objective_trace.push_back(bad != e.risks.end() ? *bad : INFINITY);
            std::ostringstream msg;
            msg << "objective became non-finite at epoch " << epoch;
            throw NumericalError(msg.str(), report.objective_trace);
        }
        const auto z = e.risk_variable(groups);
        const double rho = uses_rho ? quantile(z, agg.alpha) : 0.0;
        const double risk = uses_rho ? cvar_variational(z, agg.alpha, rho) : aggregate(z, agg);
        const double objective = risk + config.l2_reg * half_squared_norm(model.weights);

        report.objective_trace.push_back(objective);
        if (!std::isfinite(objective)) {
            std::ostringstream msg;
            msg << "objective became non-finite at epoch " << epoch;
            throw NumericalError(msg.str(), report.objective_trace);
        }
        if (epoch == 0 || objective < best_objective) {
            best_objective = objective;
            best_model = model;
            best_rho = rho;
            report.best_epoch = epoch;
        }
        if (epoch + 1 == config.epochs) break;

        const auto coeffs = group_coefficients(e.risks, groups, agg, rho, true);
        const auto g = backprop(coeffs, e, model, data, groups, config.loss, config.l2_reg);
        const double step = config.step_decay == StepDecay::InvSqrt
                                ? config.step_size / std::sqrt(static_cast<double>(epoch + 1))
                                : config.step_size;
        for (std::size_t i = 0; i < model.weights.size(); ++i) model.weights[i] -= step * g.weights[i];
        model.intercept -= step * g.intercept;
    }

    report.model = best_model;
    if (uses_rho) report.rho = best_rho;
    report.final_subgroup_risks = subgroup_risks(best_model, data, groups, config.loss);
    const auto& risks = report.final_subgroup_risks;
    report.metrics["objective"] = best_objective;
    report.metrics["weighted_risk"] = expectation(risks);
    report.metrics["subgroup_loss_gap"] = max_value(risks) - min_value(risks);
    report.metrics["max_subgroup_risk"] = max_value(risks);
    if (config.aggregator.kind == AggregatorKind::CVaR) report.metrics["alpha"] = config.aggregator.alpha;
    return report;
}

std::vector<TrainReport> alpha_sweep(const TrainConfig& config_template, const Dataset& data,
                                     std::span<const double> alphas) {
    std::vector<double> sorted(alphas.begin(), alphas.end());
    for (double a : sorted) {
        if (!(a > 0.0 && a < 1.0)) {
            std::ostringstream msg;
            msg << "sweep alpha " << a << " outside (0,1)";
            throw ParameterError(msg.str());
        }
    }
    std::sort(sorted.begin(), sorted.end());

    std::vector<std::future<TrainReport>> runs;
    runs.reserve(sorted.size());
    for (double a : sorted) {
        TrainConfig cfg = config_template;
        cfg.aggregator = AggregatorSpec::cvar(a);
        runs.push_back(std::async(std::launch::async, [cfg, &data] { return train(cfg, data); }));
    }
    std::vector<TrainReport> reports;
    reports.reserve(runs.size());
    for (auto& r : runs) reports.push_back(r.get());
    return reports;
}

}  // namespace fairrisk
