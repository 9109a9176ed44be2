#include "fairrisk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairrisk/errors.hpp"
#include "fairrisk/numeric.hpp"

namespace fairrisk {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw ParameterError(std::string(what) + ": input lengths differ");
}

}  // namespace

std::vector<int> predictions(const LinearModel& model, const Dataset& data) {
    const auto s = scores(model, data);
    std::vector<int> out(s.size());
    std::transform(s.begin(), s.end(), out.begin(), [](double v) { return v >= 0.0 ? 1 : -1; });
    return out;
}

std::vector<double> subgroup_error_rates(std::span<const int> predictions, std::span<const int> labels,
                                         const GroupPartition& groups) {
    require_same_length(predictions.size(), labels.size(), "subgroup_error_rates");
    require_same_length(predictions.size(), groups.group_ids.size(), "subgroup_error_rates");
    std::vector<double> errors(groups.num_groups(), 0.0);
    for (std::size_t j = 0; j < predictions.size(); ++j) {
        if (predictions[j] != labels[j]) errors[groups.group_ids[j]] += 1.0;
    }
    for (std::size_t g = 0; g < errors.size(); ++g) {
        errors[g] /= static_cast<double>(groups.group_sizes[g]);
    }
    return errors;
}

double mean_difference_01(std::span<const int> predictions, std::span<const int> labels,
                          const GroupPartition& groups) {
    if (groups.num_groups() != 2) throw ParameterError("mean difference needs exactly two groups");
    const auto err = subgroup_error_rates(predictions, labels, groups);
    return std::abs(err[0] - err[1]);
}

double dp_violation(std::span<const int> predictions, const GroupPartition& groups) {
    require_same_length(predictions.size(), groups.group_ids.size(), "dp_violation");
    std::vector<double> positive(groups.num_groups(), 0.0);
    for (std::size_t j = 0; j < predictions.size(); ++j) {
        if (predictions[j] == 1) positive[groups.group_ids[j]] += 1.0;
    }
    double worst = 0.0;
    for (int value : {-1, 1}) {
        double lo = 1.0;
        double hi = 0.0;
        for (std::size_t g = 0; g < positive.size(); ++g) {
            const double rate_pos = positive[g] / static_cast<double>(groups.group_sizes[g]);
            const double rate = value == 1 ? rate_pos : 1.0 - rate_pos;
            lo = std::min(lo, rate);
            hi = std::max(hi, rate);
        }
        worst = std::max(worst, hi - lo);
    }
    return worst;
}

double covariance_metric(std::span<const double> a, std::span<const double> s) {
    require_same_length(a.size(), s.size(), "covariance_metric");
    if (a.empty()) throw ParameterError("covariance_metric: empty input");
    const double m = static_cast<double>(a.size());
    const double mean_a = detail::compensated_sum(a) / m;
    const double mean_s = detail::compensated_sum(s) / m;
    detail::CompensatedSum c;
    for (std::size_t j = 0; j < a.size(); ++j) c.add((a[j] - mean_a) * (s[j] - mean_s));
    return c.value() / m;
}

double mutual_information_metric(std::span<const int> predictions, const GroupPartition& groups) {
    require_same_length(predictions.size(), groups.group_ids.size(), "mutual_information_metric");
    const std::size_t n = groups.num_groups();
    std::vector<double> joint(2 * n, 0.0);
    for (std::size_t j = 0; j < predictions.size(); ++j) {
        joint[groups.group_ids[j] * 2 + (predictions[j] == 1 ? 1 : 0)] += 1.0;
    }
    const double m = static_cast<double>(predictions.size());
    double pa[2] = {0.0, 0.0};
    for (std::size_t g = 0; g < n; ++g) {
        pa[0] += joint[2 * g];
        pa[1] += joint[2 * g + 1];
    }
    pa[0] /= m;
    pa[1] /= m;
    detail::CompensatedSum mi;
    for (std::size_t g = 0; g < n; ++g) {
        const double ps = static_cast<double>(groups.group_sizes[g]) / m;
        for (int a = 0; a < 2; ++a) {
            const double pj = joint[2 * g + a] / m;
            if (pj > 0.0) mi.add(pj * std::log(pj / (pa[a] * ps)));
        }
    }
    return std::max(0.0, mi.value());
}

double pairwise_disagreement(std::span<const double> scores, std::span<const int> labels) {
    require_same_length(scores.size(), labels.size(), "pairwise_disagreement");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Ascending sweep over blocks of tied scores: negatives in a block are
    // ranked above every positive in earlier blocks.
    double positives_below = 0.0;
    double wrong = 0.0;
    double total_pos = 0.0;
    double total_neg = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t end = i;
        double pos = 0.0;
        double neg = 0.0;
        while (end < order.size() && scores[order[end]] == scores[order[i]]) {
            (labels[order[end]] == 1 ? pos : neg) += 1.0;
            ++end;
        }
        wrong += neg * positives_below + 0.5 * pos * neg;
        positives_below += pos;
        total_pos += pos;
        total_neg += neg;
        i = end;
    }
    if (total_pos == 0.0 || total_neg == 0.0) {
        throw UndefinedMetricError("pairwise disagreement needs both positive and negative labels");
    }
    return wrong / (total_pos * total_neg);
}

double subgroup_loss_gap(const DiscreteRandomVariable& risks) {
    return max_value(risks) - min_value(risks);
}

EvaluationReport evaluate(const LinearModel& model, const Dataset& data, const GroupPartition& groups,
                          LossKind loss) {
    EvaluationReport r;
    const auto s = scores(model, data);
    const auto pred = predictions(model, data);

    double wrong = 0.0;
    for (std::size_t j = 0; j < pred.size(); ++j) wrong += pred[j] != data.labels[j] ? 1.0 : 0.0;
    r.zero_one_risk = wrong / static_cast<double>(pred.size());
    r.subgroup_zero_one = subgroup_error_rates(pred, data.labels, groups);
    if (groups.num_groups() == 2) r.mean_difference = mean_difference_01(pred, data.labels, groups);
    r.dp_violation = dp_violation(pred, groups);

    const std::vector<double> pred_real(pred.begin(), pred.end());
    r.covariance = covariance_metric(pred_real, data.sensitive_as_real());
    r.mutual_information_nats = mutual_information_metric(pred, groups);
    try {
        r.pairwise_disagreement = pairwise_disagreement(s, data.labels);
    } catch (const UndefinedMetricError&) {
        r.pairwise_disagreement.reset();
    }
    const auto risks = subgroup_risks(model, data, groups, loss);
    r.subgroup_loss_gap = subgroup_loss_gap(risks);
    r.weighted_risk = expectation(risks);
    return r;
}

}  // namespace fairrisk
