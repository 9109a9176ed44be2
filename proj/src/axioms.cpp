#include "fairrisk/axioms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include "fairrisk/errors.hpp"
#include "fairrisk/numeric.hpp"

namespace fairrisk {

namespace {

using Values = std::vector<double>;

double scale_of(std::initializer_list<const Values*> vs) {
    double s = 1.0;
    for (const Values* v : vs) {
        for (double x : *v) s = std::max(s, std::abs(x));
    }
    return s;
}

/// Draws random variables on a shared finite sample space.
class Sampler {
public:
    Sampler(const AggregatorSpec& measure, std::uint64_t seed) : measure_(measure), rng_(seed) {}

    /// Fresh sample space: size and probability vector. TopK needs equal
    /// probabilities and at least k outcomes.
    void new_space() {
        std::size_t lo = 2;
        std::size_t hi = 10;
        if (measure_.kind == AggregatorKind::TopK) {
            lo = std::max(lo, measure_.k);
            hi = lo + 8;
        }
        n_ = std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
        const bool uniform = measure_.kind == AggregatorKind::TopK || coin(0.25);
        probs_ = uniform ? uniform_probs(n_) : random_probs(n_);
    }

    Values uniform_probs(std::size_t n) const {
        return Values(n, 1.0 / static_cast<double>(n));
    }

    Values random_probs(std::size_t n) {
        std::uniform_real_distribution<double> u(0.05, 1.0);
        Values p(n);
        for (auto& x : p) x = u(rng_);
        const double total = detail::compensated_sum(p);
        for (auto& x : p) x /= total;
        return p;
    }

    /// Half the time continuous values in [-10,10], otherwise small integers
    /// so that ties between outcomes are common.
    Values values() {
        Values v(n_);
        if (coin(0.5)) {
            std::uniform_real_distribution<double> u(-10.0, 10.0);
            for (auto& x : v) x = u(rng_);
        } else {
            std::uniform_int_distribution<int> u(-3, 3);
            for (auto& x : v) x = u(rng_);
        }
        return v;
    }

    Values non_constant_values() {
        for (;;) {
            Values v = values();
            const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
            if (*hi - *lo > 0.1) return v;
        }
    }

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }
    std::mt19937_64& rng() { return rng_; }

    const Values& probs() const { return probs_; }
    void set_probs(Values p) {
        probs_ = std::move(p);
        n_ = probs_.size();
    }
    std::size_t n() const { return n_; }

    double risk(const Values& z) const {
        return aggregate(DiscreteRandomVariable::from_columns(z, probs_), measure_);
    }
    double mean(const Values& z) const {
        return expectation(DiscreteRandomVariable::from_columns(z, probs_));
    }

private:
    AggregatorSpec measure_;
    std::mt19937_64 rng_;
    std::size_t n_ = 0;
    Values probs_;
};

Values affine(const Values& a, double ca, const Values& b, double cb) {
    Values out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = ca * a[i] + cb * b[i];
    return out;
}

Values shifted(const Values& a, double c) {
    Values out(a);
    for (auto& x : out) x += c;
    return out;
}

Counterexample make_cex(const Sampler& s, Values z, Values z_prime, double lhs, double rhs,
                        std::string relation, std::map<std::string, double> params = {}) {
    Counterexample c;
    c.probs = s.probs();
    c.z = std::move(z);
    c.z_prime = std::move(z_prime);
    c.lhs = lhs;
    c.rhs = rhs;
    c.relation = std::move(relation);
    c.parameters = std::move(params);
    return c;
}

using Trial = std::optional<Counterexample>;

Trial trial_convexity(Sampler& s) {
    const Values z = s.values();
    const Values zp = s.coin(0.25) ? affine(z, -1.0, z, 0.0) : s.values();
    const double t = s.uniform(0.0, 1.0);
    const double lhs = s.risk(affine(z, 1.0 - t, zp, t));
    const double rhs = (1.0 - t) * s.risk(z) + t * s.risk(zp);
    if (lhs > rhs + kAxiomTolerance * scale_of({&z, &zp})) {
        return make_cex(s, z, zp, lhs, rhs, "R((1-t)Z+tZ') <= (1-t)R(Z)+tR(Z')", {{"t", t}});
    }
    return std::nullopt;
}

Trial trial_homogeneity(Sampler& s) {
    const Values zero(s.n(), 0.0);
    const double r0 = s.risk(zero);
    if (std::abs(r0) > kAxiomTolerance) return make_cex(s, zero, {}, r0, 0.0, "R(0) = 0");
    const Values z = s.values();
    const double c = s.uniform(0.01, 10.0);
    const double lhs = s.risk(affine(z, c, z, 0.0));
    const double rhs = c * s.risk(z);
    if (!detail::nearly_equal(lhs, rhs, kAxiomTolerance)) {
        return make_cex(s, z, {}, lhs, rhs, "R(cZ) = cR(Z)", {{"c", c}});
    }
    return std::nullopt;
}

Trial trial_monotonicity(Sampler& s) {
    const Values z = s.values();
    Values zp(z);
    if (s.coin(0.3)) {
        // Lift everything below a level up to that level.
        const auto [lo, hi] = std::minmax_element(z.begin(), z.end());
        const double level = s.uniform(*lo, *hi);
        for (auto& x : zp) x = std::max(x, level);
    } else {
        for (auto& x : zp) {
            if (s.coin(0.5)) x += s.uniform(0.0, 5.0);
        }
    }
    const double lhs = s.risk(z);
    const double rhs = s.risk(zp);
    if (lhs > rhs + kAxiomTolerance * scale_of({&z, &zp})) {
        return make_cex(s, z, zp, lhs, rhs, "Z <= Z' implies R(Z) <= R(Z')");
    }
    return std::nullopt;
}

Trial trial_continuity(Sampler& s) {
    const Values z = s.values();
    const Values zp = s.values();
    const double t = s.uniform(0.0, 1.0);
    constexpr double h = 1e-10;
    const double here = s.risk(affine(z, 1.0 - t, zp, t));
    const double near = s.risk(affine(z, 1.0 - (t + h), zp, t + h));
    const double tol = 1e-6 * (1.0 + scale_of({&z, &zp}));
    if (std::abs(near - here) > tol) {
        return make_cex(s, z, zp, near, here, "R continuous along the segment Z -> Z'",
                        {{"t", t}, {"h", h}});
    }
    return std::nullopt;
}

Trial trial_translation(Sampler& s) {
    const Values z = s.values();
    const double c = s.uniform(-10.0, 10.0);
    const double lhs = s.risk(shifted(z, c));
    const double rhs = s.risk(z) + c;
    if (!detail::nearly_equal(lhs, rhs, kAxiomTolerance)) {
        return make_cex(s, z, {}, lhs, rhs, "R(Z+C) = R(Z)+C", {{"C", c}});
    }
    return std::nullopt;
}

Trial trial_aversity(Sampler& s) {
    const Values z = s.non_constant_values();
    const double lhs = s.risk(z);
    const double rhs = s.mean(z);
    if (!(lhs > rhs)) return make_cex(s, z, {}, lhs, rhs, "R(Z) > E(Z) for non-constant Z");
    return std::nullopt;
}

Trial trial_law_invariance(Sampler& s, std::size_t trial) {
    if (trial % 2 == 0) {
        // Permuting outcomes of an equal-probability space keeps the law.
        s.set_probs(s.uniform_probs(s.n()));
        const Values z = s.values();
        Values zp(z);
        std::shuffle(zp.begin(), zp.end(), s.rng());
        const double lhs = s.risk(z);
        const double rhs = s.risk(zp);
        if (!detail::nearly_equal(lhs, rhs, kAxiomTolerance)) {
            return make_cex(s, z, zp, lhs, rhs, "R(Z) = R(Z o pi)");
        }
        return std::nullopt;
    }
    // Splitting one outcome into two of half the mass keeps the law.
    const Values z = s.values();
    const double lhs = s.risk(z);
    Values probs = s.probs();
    Values split_z(z);
    const std::size_t i = std::uniform_int_distribution<std::size_t>(0, z.size() - 1)(s.rng());
    probs[i] /= 2.0;
    probs.push_back(probs[i]);
    split_z.push_back(z[i]);
    const Values original_probs = s.probs();
    s.set_probs(probs);
    const double rhs = s.risk(split_z);
    if (!detail::nearly_equal(lhs, rhs, kAxiomTolerance)) {
        return make_cex(s, z, split_z, lhs, rhs, "R(Z) = R(Z') when P_Z = P_Z'",
                        {{"split_index", static_cast<double>(i)}});
    }
    s.set_probs(original_probs);
    return std::nullopt;
}

Trial trial_constants(Sampler& s) {
    const double c = s.uniform(-10.0, 10.0);
    const Values z(s.n(), c);
    const double lhs = s.risk(z);
    if (!detail::nearly_equal(lhs, c, kAxiomTolerance)) {
        return make_cex(s, z, {}, lhs, c, "R(C) = C", {{"C", c}});
    }
    return std::nullopt;
}

Trial trial_positivity(Sampler& s, std::size_t trial) {
    if (trial % 2 == 0) {
        const double c = s.uniform(-10.0, 10.0);
        const Values z(s.n(), c);
        const double d = s.risk(z) - s.mean(z);
        if (std::abs(d) > kAxiomTolerance * std::max(1.0, std::abs(c))) {
            return make_cex(s, z, {}, d, 0.0, "D(C) = 0 on constants");
        }
        return std::nullopt;
    }
    const Values z = s.non_constant_values();
    const double d = s.risk(z) - s.mean(z);
    if (!(d > 0.0)) return make_cex(s, z, {}, d, 0.0, "D(Z) > 0 for non-constant Z");
    return std::nullopt;
}

}  // namespace

std::string_view to_string(FairnessAxiom axiom) {
    switch (axiom) {
        case FairnessAxiom::F1: return "F1";
        case FairnessAxiom::F2: return "F2";
        case FairnessAxiom::F3: return "F3";
        case FairnessAxiom::F4: return "F4";
        case FairnessAxiom::F5: return "F5";
        case FairnessAxiom::F6: return "F6";
        case FairnessAxiom::F7: return "F7";
        case FairnessAxiom::F8: return "F8";
        case FairnessAxiom::F9: return "F9";
    }
    return "?";
}

FairnessAxiom parse_fairness_axiom(std::string_view tag) {
    for (FairnessAxiom a : kAllFairnessAxioms) {
        if (to_string(a) == tag) return a;
    }
    throw ParameterError("unknown fairness axiom '" + std::string(tag) + "'");
}

FalsificationReport check_axiom(const AggregatorSpec& measure, FairnessAxiom axiom,
                                std::size_t trials, std::uint64_t seed) {
    if (trials < 1) throw ParameterError("trials must be >= 1");
    measure.validate();

    FalsificationReport report;
    report.axiom = std::string(to_string(axiom));
    report.measure = measure.describe();

    Sampler s(measure, seed);
    for (std::size_t i = 0; i < trials; ++i) {
        s.new_space();
        Trial result;
        switch (axiom) {
            case FairnessAxiom::F1: result = trial_convexity(s); break;
            case FairnessAxiom::F2: result = trial_homogeneity(s); break;
            case FairnessAxiom::F3: result = trial_monotonicity(s); break;
            case FairnessAxiom::F4: result = trial_continuity(s); break;
            case FairnessAxiom::F5: result = trial_translation(s); break;
            case FairnessAxiom::F6: result = trial_aversity(s); break;
            case FairnessAxiom::F7: result = trial_law_invariance(s, i); break;
            case FairnessAxiom::F8: result = trial_constants(s); break;
            case FairnessAxiom::F9: result = trial_positivity(s, i); break;
        }
        report.trials_run = i + 1;
        if (result) {
            report.passed = false;
            report.counterexample = std::move(result);
            break;
        }
    }
    return report;
}

}  // namespace fairrisk
