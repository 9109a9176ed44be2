#include "fairrisk/subgroup.hpp"

#include <cmath>
#include <sstream>
#include <unordered_map>

#include "fairrisk/errors.hpp"
#include "fairrisk/numeric.hpp"

namespace fairrisk {

std::vector<double> Dataset::sensitive_as_real() const {
    if (const auto* cat = std::get_if<CategoricalSensitive>(&sensitive)) {
        return {cat->codes.begin(), cat->codes.end()};
    }
    return std::get<RealSensitive>(sensitive).values;
}

void Dataset::validate() const {
    const std::size_t m = labels.size();
    if (m == 0) throw InputError("dataset is empty");
    if (features.rows() != m) throw InputError("feature rows do not match label count");
    if (features.cols() == 0) throw InputError("dataset has no feature columns");
    for (std::size_t j = 0; j < m; ++j) {
        if (labels[j] != 1 && labels[j] != -1) {
            std::ostringstream msg;
            msg << "label at row " << j << " is " << labels[j] << ", expected -1 or +1";
            throw InputError(msg.str());
        }
    }
    for (double x : features.data()) {
        if (!std::isfinite(x)) throw InputError("feature matrix has a non-finite entry");
    }
    const std::size_t sens_size = std::visit(
        [](const auto& s) {
            if constexpr (std::is_same_v<std::decay_t<decltype(s)>, CategoricalSensitive>) {
                return s.codes.size();
            } else {
                return s.values.size();
            }
        },
        sensitive);
    if (sens_size != m) throw InputError("sensitive column length does not match label count");

    if (group_weighting) {
        const auto* cat = std::get_if<CategoricalSensitive>(&sensitive);
        if (!cat) throw InputError("group weighting needs a categorical sensitive feature");
        std::map<int, bool> seen;
        for (int c : cat->codes) seen[c] = true;
        detail::CompensatedSum total;
        for (const auto& [code, w] : *group_weighting) {
            if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("group weights must be >= 0");
            if (!seen.count(code)) {
                std::ostringstream msg;
                msg << "group weighting names group " << code << " which has no rows";
                throw InputError(msg.str());
            }
            total.add(w);
        }
        for (const auto& [code, _] : seen) {
            if (!group_weighting->count(code)) {
                std::ostringstream msg;
                msg << "group weighting is missing observed group " << code;
                throw InputError(msg.str());
            }
        }
        if (std::abs(total.value() - 1.0) > 1e-12) throw InputError("group weights must sum to 1");
    }
}

Dataset Dataset::subset(std::span<const std::size_t> idx) const {
    Dataset out;
    out.features = Matrix(idx.size(), features.cols());
    out.labels.reserve(idx.size());
    out.feature_names = feature_names;
    out.group_weighting = group_weighting;
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto src = features.row(idx[r]);
        std::copy(src.begin(), src.end(), out.features.row(r).begin());
        out.labels.push_back(labels[idx[r]]);
    }
    if (const auto* cat = std::get_if<CategoricalSensitive>(&sensitive)) {
        CategoricalSensitive s;
        s.names = cat->names;
        for (std::size_t i : idx) s.codes.push_back(cat->codes[i]);
        out.sensitive = std::move(s);
    } else {
        const auto& real = std::get<RealSensitive>(sensitive);
        RealSensitive s;
        for (std::size_t i : idx) s.values.push_back(real.values[i]);
        out.sensitive = std::move(s);
    }
    return out;
}

std::string_view to_string(PartitionMode mode) {
    return mode == PartitionMode::Categorical ? "categorical" : "per_instance";
}

GroupPartition partition(const Dataset& data, PartitionMode mode) {
    data.validate();
    const std::size_t m = data.size();
    GroupPartition p;
    p.group_ids.resize(m);

    if (mode == PartitionMode::PerInstance) {
        p.group_sizes.assign(m, 1);
        p.group_probs.assign(m, 1.0 / static_cast<double>(m));
        for (std::size_t j = 0; j < m; ++j) p.group_ids[j] = j;
        return p;
    }

    const auto* cat = std::get_if<CategoricalSensitive>(&data.sensitive);
    if (!cat) throw InputError("categorical partition needs categorical sensitive values");

    std::unordered_map<int, std::size_t> index;
    for (std::size_t j = 0; j < m; ++j) {
        const int code = cat->codes[j];
        auto [it, inserted] = index.emplace(code, p.group_codes.size());
        if (inserted) {
            p.group_codes.push_back(code);
            p.group_sizes.push_back(0);
        }
        p.group_ids[j] = it->second;
        ++p.group_sizes[it->second];
    }

    p.group_probs.resize(p.group_sizes.size());
    for (std::size_t s = 0; s < p.group_sizes.size(); ++s) {
        p.group_probs[s] = data.group_weighting
                               ? data.group_weighting->at(p.group_codes[s])
                               : static_cast<double>(p.group_sizes[s]) / static_cast<double>(m);
    }
    return p;
}

double LinearModel::score(std::span<const double> x) const {
    double s = intercept;
    for (std::size_t i = 0; i < x.size(); ++i) s += weights[i] * x[i];
    return s;
}

std::vector<double> scores(const LinearModel& model, const Dataset& data) {
    if (model.weights.size() != data.dims()) {
        throw ParameterError("model dimension does not match the dataset");
    }
    std::vector<double> out(data.size());
    for (std::size_t j = 0; j < data.size(); ++j) out[j] = model.score(data.features.row(j));
    return out;
}

std::string_view to_string(LossKind kind) {
    switch (kind) {
        case LossKind::ZeroOne: return "zero_one";
        case LossKind::Hinge: return "hinge";
        case LossKind::SquaredHinge: return "squared_hinge";
        case LossKind::Logistic: return "logistic";
        case LossKind::Linear: return "linear";
    }
    return "unknown";
}

LossKind parse_loss(std::string_view name) {
    for (LossKind k : {LossKind::ZeroOne, LossKind::Hinge, LossKind::SquaredHinge,
                       LossKind::Logistic, LossKind::Linear}) {
        if (to_string(k) == name) return k;
    }
    throw ParameterError("unknown loss '" + std::string(name) + "'");
}

bool is_convex(LossKind kind) { return kind != LossKind::ZeroOne; }

double loss_value(LossKind kind, int label, double score) {
    const double margin = label * score;
    switch (kind) {
        case LossKind::ZeroOne: {
            const int predicted = score >= 0.0 ? 1 : -1;
            return predicted == label ? 0.0 : 1.0;
        }
        case LossKind::Hinge: return std::max(0.0, 1.0 - margin);
        case LossKind::SquaredHinge: {
            const double h = std::max(0.0, 1.0 - margin);
            return h * h;
        }
        case LossKind::Logistic:
            // ln(1 + e^{-margin}) without overflow for large |margin|.
            return margin > 0.0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
        case LossKind::Linear: return -margin;
    }
    return 0.0;
}

double loss_derivative(LossKind kind, int label, double score) {
    const double margin = label * score;
    switch (kind) {
        case LossKind::ZeroOne: throw ParameterError("zero-one loss has no subgradient");
        case LossKind::Hinge: return margin < 1.0 ? -label : 0.0;
        case LossKind::SquaredHinge: return margin < 1.0 ? -2.0 * (1.0 - margin) * label : 0.0;
        case LossKind::Logistic: {
            // -y * sigmoid(-margin)
            const double s = margin > 0.0 ? std::exp(-margin) / (1.0 + std::exp(-margin))
                                          : 1.0 / (1.0 + std::exp(margin));
            return -label * s;
        }
        case LossKind::Linear: return -label;
    }
    return 0.0;
}

DiscreteRandomVariable subgroup_risks(const LinearModel& model, const Dataset& data,
                                      const GroupPartition& groups, LossKind loss) {
    if (groups.group_ids.size() != data.size()) {
        throw ParameterError("partition does not match the dataset");
    }
    const auto s = scores(model, data);
    std::vector<detail::CompensatedSum> sums(groups.num_groups());
    for (std::size_t j = 0; j < data.size(); ++j) {
        sums[groups.group_ids[j]].add(loss_value(loss, data.labels[j], s[j]));
    }
    std::vector<Atom> atoms(groups.num_groups());
    for (std::size_t g = 0; g < atoms.size(); ++g) {
        atoms[g] = {sums[g].value() / static_cast<double>(groups.group_sizes[g]), groups.group_probs[g]};
    }
    return DiscreteRandomVariable(std::move(atoms));
}

double weighted_risk(const LinearModel& model, const Dataset& data, const GroupPartition& groups,
                     LossKind loss) {
    return expectation(subgroup_risks(model, data, groups, loss));
}

DiscreteRandomVariable margins(const LinearModel& model, const Dataset& data) {
    const auto s = scores(model, data);
    std::vector<double> values(data.size());
    for (std::size_t j = 0; j < data.size(); ++j) values[j] = -data.labels[j] * s[j];
    return DiscreteRandomVariable::uniform(values);
}

}  // namespace fairrisk
