#include "fairrisk/riskvar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fairrisk/errors.hpp"
#include "fairrisk/numeric.hpp"

namespace fairrisk {

namespace {

constexpr double kProbSumTol = 1e-12;
// Slack when comparing a cumulative probability against alpha, so that
// alpha = 1 - k/n lands on the k-th atom from the top despite rounding.
constexpr double kCdfSlack = 64 * std::numeric_limits<double>::epsilon();

void require_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        std::ostringstream msg;
        msg << "alpha must lie in (0,1), got " << alpha;
        throw ParameterError(msg.str());
    }
}

}  // namespace

DiscreteRandomVariable::DiscreteRandomVariable(std::vector<Atom> atoms)
    : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw InputError("random variable needs at least one atom");
    detail::CompensatedSum total;
    for (const auto& a : atoms_) {
        if (!std::isfinite(a.value)) throw InputError("atom value is not finite");
        if (!(a.prob >= 0.0 && a.prob <= 1.0)) {
            std::ostringstream msg;
            msg << "atom probability " << a.prob << " outside [0,1]";
            throw InputError(msg.str());
        }
        total.add(a.prob);
    }
    if (std::abs(total.value() - 1.0) > kProbSumTol) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "atom probabilities sum to " << total.value() << ", expected 1";
        throw InputError(msg.str());
    }
}

DiscreteRandomVariable DiscreteRandomVariable::uniform(std::span<const double> values) {
    if (values.empty()) throw InputError("random variable needs at least one atom");
    const double p = 1.0 / static_cast<double>(values.size());
    std::vector<Atom> atoms;
    atoms.reserve(values.size());
    for (double v : values) atoms.push_back({v, p});
    return DiscreteRandomVariable(std::move(atoms));
}

DiscreteRandomVariable DiscreteRandomVariable::constant(double value) {
    return DiscreteRandomVariable({{value, 1.0}});
}

DiscreteRandomVariable DiscreteRandomVariable::from_columns(std::span<const double> values,
                                                            std::span<const double> probs) {
    if (values.size() != probs.size()) {
        throw InputError("value and probability columns differ in length");
    }
    std::vector<Atom> atoms(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) atoms[i] = {values[i], probs[i]};
    return DiscreteRandomVariable(std::move(atoms));
}

std::vector<double> DiscreteRandomVariable::values() const {
    std::vector<double> out(atoms_.size());
    std::transform(atoms_.begin(), atoms_.end(), out.begin(), [](const Atom& a) { return a.value; });
    return out;
}

std::vector<double> DiscreteRandomVariable::probs() const {
    std::vector<double> out(atoms_.size());
    std::transform(atoms_.begin(), atoms_.end(), out.begin(), [](const Atom& a) { return a.prob; });
    return out;
}

std::vector<Atom> DiscreteRandomVariable::merged() const {
    std::vector<Atom> sorted;
    sorted.reserve(atoms_.size());
    for (const auto& a : atoms_) {
        if (a.prob > 0.0) sorted.push_back(a);
    }
    std::sort(sorted.begin(), sorted.end(),
              [](const Atom& a, const Atom& b) { return a.value < b.value; });
    std::vector<Atom> out;
    out.reserve(sorted.size());
    for (const auto& a : sorted) {
        if (!out.empty() && out.back().value == a.value) {
            out.back().prob += a.prob;
        } else {
            out.push_back(a);
        }
    }
    return out;
}

bool DiscreteRandomVariable::is_constant() const {
    return min_value(*this) == max_value(*this);
}

AggregatorSpec AggregatorSpec::cvar(double alpha) {
    AggregatorSpec s;
    s.kind = AggregatorKind::CVaR;
    s.alpha = alpha;
    s.validate();
    return s;
}

AggregatorSpec AggregatorSpec::sd_penalty(double lambda) {
    AggregatorSpec s;
    s.kind = AggregatorKind::SDPenalty;
    s.lambda = lambda;
    s.validate();
    return s;
}

AggregatorSpec AggregatorSpec::top_k(std::size_t k) {
    AggregatorSpec s;
    s.kind = AggregatorKind::TopK;
    s.k = k;
    s.validate();
    return s;
}

AggregatorSpec AggregatorSpec::max() {
    AggregatorSpec s;
    s.kind = AggregatorKind::Max;
    return s;
}

void AggregatorSpec::validate() const {
    switch (kind) {
        case AggregatorKind::CVaR:
            require_alpha(alpha);
            break;
        case AggregatorKind::SDPenalty:
            if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
                throw ParameterError("lambda must be a finite value >= 0");
            }
            break;
        case AggregatorKind::TopK:
            if (k < 1) throw ParameterError("k must be >= 1");
            break;
        case AggregatorKind::Expectation:
        case AggregatorKind::Max:
            break;
    }
}

std::string AggregatorSpec::describe() const {
    std::ostringstream out;
    out << to_string(kind);
    switch (kind) {
        case AggregatorKind::CVaR: out << "(alpha=" << alpha << ")"; break;
        case AggregatorKind::SDPenalty: out << "(lambda=" << lambda << ")"; break;
        case AggregatorKind::TopK: out << "(k=" << k << ")"; break;
        default: break;
    }
    return out.str();
}

std::string_view to_string(AggregatorKind kind) {
    switch (kind) {
        case AggregatorKind::Expectation: return "expectation";
        case AggregatorKind::CVaR: return "cvar";
        case AggregatorKind::SDPenalty: return "sd";
        case AggregatorKind::TopK: return "topk";
        case AggregatorKind::Max: return "max";
    }
    return "unknown";
}

double expectation(const DiscreteRandomVariable& z) {
    detail::CompensatedSum s;
    for (const auto& a : z.atoms()) {
        if (a.prob > 0.0) s.add(a.value * a.prob);
    }
    // Probabilities only sum to 1 within rounding; keep the mean inside the support.
    const double lo = min_value(z), hi = max_value(z);
    if (lo == hi) return lo;
    return std::clamp(s.value(), lo, hi);
}

double quantile(const DiscreteRandomVariable& z, double alpha) {
    require_alpha(alpha);
    const auto atoms = z.merged();
    detail::CompensatedSum cdf;
    for (const auto& a : atoms) {
        cdf.add(a.prob);
        if (cdf.value() + kCdfSlack >= alpha) return a.value;
    }
    return atoms.back().value;
}

double cvar_variational(const DiscreteRandomVariable& z, double alpha, double rho) {
    require_alpha(alpha);
    detail::CompensatedSum excess;
    for (const auto& a : z.atoms()) {
        if (a.prob > 0.0 && a.value > rho) excess.add(a.prob * (a.value - rho));
    }
    return rho + excess.value() / (1.0 - alpha);
}

double cvar(const DiscreteRandomVariable& z, double alpha) {
    require_alpha(alpha);
    const auto atoms = z.merged();
    const double scale = 1.0 / (1.0 - alpha);

    // Walk from the largest atom down. With rho at atom j, the expected excess
    // is excess_j = sum_{i>j} p_i (v_i - v_j), updated as
    // excess_{j-1} = excess_j + P(Z >= v_j) * (v_j - v_{j-1}); every term is
    // non-negative so the recurrence does not cancel.
    std::size_t j = atoms.size() - 1;
    double excess = 0.0;
    double upper_mass = atoms[j].prob;
    double best = atoms[j].value;
    while (j > 0) {
        excess += upper_mass * (atoms[j].value - atoms[j - 1].value);
        --j;
        best = std::min(best, atoms[j].value + scale * excess);
        upper_mass += atoms[j].prob;
    }
    return best;
}

double cvar_deviation(const DiscreteRandomVariable& z, double alpha) {
    return cvar(z, alpha) - expectation(z);
}

double variance(const DiscreteRandomVariable& z) {
    const double mean = expectation(z);
    detail::CompensatedSum s;
    for (const auto& a : z.atoms()) {
        if (a.prob > 0.0) {
            const double d = a.value - mean;
            s.add(a.prob * d * d);
        }
    }
    return std::max(0.0, s.value());
}

double sd_deviation(const DiscreteRandomVariable& z) {
    return std::sqrt(variance(z));
}

double max_value(const DiscreteRandomVariable& z) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& a : z.atoms()) {
        if (a.prob > 0.0) best = std::max(best, a.value);
    }
    return best;
}

double min_value(const DiscreteRandomVariable& z) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& a : z.atoms()) {
        if (a.prob > 0.0) best = std::min(best, a.value);
    }
    return best;
}

double top_k_mean(const DiscreteRandomVariable& z, std::size_t k) {
    const auto& atoms = z.atoms();
    if (k < 1 || k > atoms.size()) {
        std::ostringstream msg;
        msg << "top-k needs 1 <= k <= " << atoms.size() << ", got k=" << k;
        throw ParameterError(msg.str());
    }
    const double p = atoms.front().prob;
    for (const auto& a : atoms) {
        if (!detail::nearly_equal(a.prob, p, 1e-12)) {
            throw ParameterError("top-k aggregation requires equal-probability atoms");
        }
    }
    auto values = z.values();
    std::partial_sort(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end(),
                      std::greater<>());
    return detail::compensated_sum(std::span(values).first(k)) / static_cast<double>(k);
}

double aggregate(const DiscreteRandomVariable& z, const AggregatorSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case AggregatorKind::Expectation: return expectation(z);
        case AggregatorKind::CVaR: return cvar(z, spec.alpha);
        case AggregatorKind::SDPenalty: return expectation(z) + spec.lambda * sd_deviation(z);
        case AggregatorKind::TopK: return top_k_mean(z, spec.k);
        case AggregatorKind::Max: return max_value(z);
    }
    throw ParameterError("unknown aggregator kind");
}

double deviation(const DiscreteRandomVariable& z, const AggregatorSpec& spec) {
    return aggregate(z, spec) - expectation(z);
}

}  // namespace fairrisk
