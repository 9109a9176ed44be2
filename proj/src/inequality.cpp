#include "fairrisk/inequality.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

#include "fairrisk/errors.hpp"
#include "fairrisk/numeric.hpp"

namespace fairrisk {

IncomeVector::IncomeVector(std::vector<double> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw InputError("income vector needs at least one entry");
    for (double v : entries_) {
        if (!std::isfinite(v) || v < 0.0) throw InputError("income entries must be finite and >= 0");
    }
}

double IncomeVector::mean() const {
    return detail::compensated_sum(entries_) / static_cast<double>(entries_.size());
}

DiscreteRandomVariable IncomeVector::as_variable() const {
    return DiscreteRandomVariable::uniform(entries_);
}

double DeviationSpec::operator()(const IncomeVector& x) const {
    const auto z = x.as_variable();
    return kind == DeviationKind::StandardDeviation ? sd_deviation(z) : fairrisk::cvar_deviation(z, alpha);
}

double inequality_from_deviation(const IncomeVector& x, const DeviationFunction& deviation) {
    const double mean = x.mean();
    if (mean == 0.0) return 0.0;
    return deviation(x) / mean;
}

double inequality_from_deviation(const IncomeVector& x, const DeviationSpec& deviation) {
    return inequality_from_deviation(x, DeviationFunction(deviation));
}

InequalityMeasure InequalityMeasure::coefficient_of_variation() {
    return from_deviation("coefficient_of_variation", DeviationSpec::standard_deviation());
}

InequalityMeasure InequalityMeasure::cvar_induced(double alpha) {
    AggregatorSpec::cvar(alpha);  // validates alpha
    std::ostringstream name;
    name << "cvar_deviation_over_mean(alpha=" << alpha << ")";
    return from_deviation(name.str(), DeviationSpec::cvar_deviation(alpha));
}

InequalityMeasure InequalityMeasure::spread_over_mean() {
    return custom("spread_over_mean", [](const IncomeVector& x) {
        const double mean = x.mean();
        if (mean == 0.0) return 0.0;
        const auto [lo, hi] = std::minmax_element(x.values().begin(), x.values().end());
        return (*hi - *lo) / mean;
    });
}

InequalityMeasure InequalityMeasure::from_deviation(std::string name, DeviationFunction deviation) {
    return InequalityMeasure(std::move(name), [d = std::move(deviation)](const IncomeVector& x) {
        return inequality_from_deviation(x, d);
    });
}

InequalityMeasure InequalityMeasure::custom(std::string name, std::function<double(const IncomeVector&)> fn) {
    return InequalityMeasure(std::move(name), std::move(fn));
}

double deviation_from_inequality(const IncomeVector& x, const InequalityMeasure& inequality) {
    return x.mean() * inequality(x);
}

double risk_from_inequality(const IncomeVector& x, const InequalityMeasure& inequality) {
    return x.mean() + deviation_from_inequality(x, inequality);
}

double LorenzCurve::at(double p) const {
    if (p <= knots.front().p) return knots.front().share;
    if (p >= knots.back().p) return knots.back().share;
    const auto hi = std::lower_bound(knots.begin(), knots.end(), p,
                                     [](const LorenzKnot& k, double v) { return k.p < v; });
    if (hi->p == p) return hi->share;
    const auto lo = hi - 1;
    const double t = (p - lo->p) / (hi->p - lo->p);
    return lo->share + t * (hi->share - lo->share);
}

LorenzCurve lorenz_curve(const IncomeVector& x) {
    std::vector<double> sorted(x.values().begin(), x.values().end());
    std::sort(sorted.begin(), sorted.end());
    const double total = detail::compensated_sum(sorted);
    if (total == 0.0) throw UndefinedMetricError("Lorenz curve is undefined for a zero-mean vector");
    const double n = static_cast<double>(sorted.size());
    LorenzCurve curve;
    curve.knots.reserve(sorted.size() + 1);
    curve.knots.push_back({0.0, 0.0});
    detail::CompensatedSum running;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        running.add(sorted[k]);
        curve.knots.push_back({static_cast<double>(k + 1) / n, running.value() / total});
    }
    return curve;
}

bool majorized_by(const IncomeVector& x, const IncomeVector& y) {
    if (x.size() != y.size()) throw ParameterError("majorization needs vectors of equal length");
    std::vector<double> xs(x.values().begin(), x.values().end());
    std::vector<double> ys(y.values().begin(), y.values().end());
    std::sort(xs.begin(), xs.end(), std::greater<>());
    std::sort(ys.begin(), ys.end(), std::greater<>());
    const double total_x = detail::compensated_sum(xs);
    const double total_y = detail::compensated_sum(ys);
    const double tol = 1e-12 * std::max({1.0, total_x, total_y});
    if (std::abs(total_x - total_y) > tol) return false;
    detail::CompensatedSum px;
    detail::CompensatedSum py;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        px.add(xs[k]);
        py.add(ys[k]);
        if (px.value() > py.value() + tol) return false;
    }
    return true;
}

bool lorenz_dominates(const IncomeVector& x, const IncomeVector& y) {
    const auto lx = lorenz_curve(x);
    const auto ly = lorenz_curve(y);
    std::vector<double> ps;
    for (const auto& k : lx.knots) ps.push_back(k.p);
    for (const auto& k : ly.knots) ps.push_back(k.p);
    for (double p : ps) {
        if (lx.at(p) < ly.at(p) - 1e-12) return false;
    }
    return true;
}

bool is_permutation_of(const IncomeVector& x, const IncomeVector& y) {
    if (x.size() != y.size()) return false;
    std::vector<double> xs(x.values().begin(), x.values().end());
    std::vector<double> ys(y.values().begin(), y.values().end());
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    return xs == ys;
}

namespace {

std::vector<double> random_incomes(std::mt19937_64& rng, std::size_t n) {
    std::vector<double> v(n);
    if (std::bernoulli_distribution(0.5)(rng)) {
        std::uniform_real_distribution<double> u(0.0, 10.0);
        for (auto& x : v) x = u(rng);
    } else {
        std::uniform_int_distribution<int> u(0, 5);
        for (auto& x : v) x = u(rng);
    }
    return v;
}

}  // namespace

MajorizationPair sample_majorization_pair(std::mt19937_64& rng, std::size_t n) {
    if (n < 1) throw ParameterError("majorization pair needs n >= 1");
    std::vector<double> y = random_incomes(rng, n);
    std::vector<double> x = y;
    if (n >= 2) {
        const std::size_t transfers = std::uniform_int_distribution<std::size_t>(1, n)(rng);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::uniform_real_distribution<double> frac(0.05, 0.45);
        for (std::size_t t = 0; t < transfers; ++t) {
            std::size_t i = pick(rng);
            std::size_t j = pick(rng);
            if (x[i] < x[j]) std::swap(i, j);
            const double gap = x[i] - x[j];
            if (i == j || gap < 1e-3) continue;
            // Less than half the gap, so the two entries keep their order.
            const double delta = frac(rng) * gap;
            x[i] -= delta;
            x[j] += delta;
        }
    }
    return {IncomeVector(std::move(x)), IncomeVector(std::move(y))};
}

std::string_view to_string(InequalityAxiom axiom) {
    switch (axiom) {
        case InequalityAxiom::I1: return "I1";
        case InequalityAxiom::I2: return "I2";
        case InequalityAxiom::I3: return "I3";
        case InequalityAxiom::I4: return "I4";
        case InequalityAxiom::I5: return "I5";
        case InequalityAxiom::I6: return "I6";
        case InequalityAxiom::I7: return "I7";
        case InequalityAxiom::I8: return "I8";
        case InequalityAxiom::I9: return "I9";
        case InequalityAxiom::I10: return "I10";
        case InequalityAxiom::I11: return "I11";
    }
    return "?";
}

InequalityAxiom parse_inequality_axiom(std::string_view tag) {
    for (int i = 0; i <= static_cast<int>(InequalityAxiom::I11); ++i) {
        const auto a = static_cast<InequalityAxiom>(i);
        if (to_string(a) == tag) return a;
    }
    throw ParameterError("unknown inequality axiom '" + std::string(tag) + "'");
}

namespace {

constexpr double kTol = 1e-9;

using Trial = std::optional<Counterexample>;

Counterexample make_cex(std::span<const double> x, std::span<const double> y, double lhs, double rhs,
                        std::string relation, std::map<std::string, double> params = {}) {
    Counterexample c;
    c.z.assign(x.begin(), x.end());
    c.z_prime.assign(y.begin(), y.end());
    c.probs.assign(x.size(), 1.0 / static_cast<double>(x.size()));
    c.lhs = lhs;
    c.rhs = rhs;
    c.relation = std::move(relation);
    c.parameters = std::move(params);
    return c;
}

double slack(double a, double b) { return kTol * std::max({1.0, std::abs(a), std::abs(b)}); }

class Checker {
public:
    Checker(const InequalityMeasure& measure, std::uint64_t seed) : I_(measure), rng_(seed) {}

    std::size_t size() { return std::uniform_int_distribution<std::size_t>(2, 10)(rng_); }
    IncomeVector vec() { return IncomeVector(random_incomes(rng_, size())); }
    IncomeVector non_constant() {
        for (;;) {
            auto v = random_incomes(rng_, size());
            const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
            if (*hi - *lo > 0.1) return IncomeVector(std::move(v));
        }
    }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

    Trial symmetry() {
        const auto x = vec();
        std::vector<double> p(x.values().begin(), x.values().end());
        std::shuffle(p.begin(), p.end(), rng_);
        const IncomeVector xp(p);
        const double a = I_(x);
        const double b = I_(xp);
        if (!detail::nearly_equal(a, b, kTol)) return make_cex(x.values(), xp.values(), a, b, "I(x o pi) = I(x)");
        return std::nullopt;
    }

    Trial scale_invariance() {
        const auto x = vec();
        const double lambda = std::exp(uniform(std::log(0.01), std::log(100.0)));
        std::vector<double> s(x.values().begin(), x.values().end());
        for (auto& v : s) v *= lambda;
        const IncomeVector xs(s);
        const double a = I_(xs);
        const double b = I_(x);
        if (!detail::nearly_equal(a, b, kTol)) {
            return make_cex(x.values(), xs.values(), a, b, "I(lambda x) = I(x)", {{"lambda", lambda}});
        }
        return std::nullopt;
    }

    Trial schur(bool strict) {
        const auto pair = sample_majorization_pair(rng_, size());
        if (strict && is_permutation_of(pair.x, pair.y)) return std::nullopt;
        const double a = I_(pair.x);
        const double b = I_(pair.y);
        const bool ok = strict ? a < b : a <= b + slack(a, b);
        if (!ok) {
            return make_cex(pair.x.values(), pair.y.values(), a, b,
                            strict ? "x majorized by y, not a permutation => I(x) < I(y)"
                                   : "x majorized by y => I(x) <= I(y)");
        }
        return std::nullopt;
    }

    Trial replication() {
        const auto x = vec();
        static constexpr std::size_t kCopies[] = {2, 3, 5};
        const std::size_t r = kCopies[std::uniform_int_distribution<int>(0, 2)(rng_)];
        std::vector<double> tiled;
        for (std::size_t c = 0; c < r; ++c) tiled.insert(tiled.end(), x.values().begin(), x.values().end());
        const IncomeVector xr(tiled);
        const double a = I_(xr);
        const double b = I_(x);
        if (!detail::nearly_equal(a, b, kTol)) {
            return make_cex(x.values(), xr.values(), a, b, "I(x^(r)) = I(x)", {{"r", static_cast<double>(r)}});
        }
        return std::nullopt;
    }

    Trial normalization(std::size_t trial) {
        if (trial % 2 == 0) {
            const double c = trial % 4 == 0 ? 0.0 : uniform(0.0, 10.0);
            const std::vector<double> v(size(), c);
            const double a = I_(IncomeVector(v));
            if (std::abs(a) > kTol) return make_cex(v, {}, a, 0.0, "I(c 1) = 0", {{"c", c}});
            return std::nullopt;
        }
        const auto x = non_constant();
        const double a = I_(x);
        if (!(a > 0.0)) return make_cex(x.values(), {}, a, 0.0, "I(x) > 0 for non-constant x");
        return std::nullopt;
    }

    Trial constant_addition() {
        const auto x = vec();
        const double c = uniform(0.01, 10.0);
        std::vector<double> s(x.values().begin(), x.values().end());
        for (auto& v : s) v += c;
        const IncomeVector xc(s);
        const double a = I_(xc);
        const double b = I_(x);
        if (a > b + slack(a, b)) return make_cex(x.values(), xc.values(), a, b, "I(x + c 1) <= I(x)", {{"c", c}});
        return std::nullopt;
    }

    Trial constant_sum_convexity() {
        const std::size_t n = size();
        const auto x = IncomeVector(random_incomes(rng_, n));
        auto yv = random_incomes(rng_, n);
        const double sx = detail::compensated_sum(x.values());
        const double sy = detail::compensated_sum(yv);
        if (sx == 0.0 || sy == 0.0) return std::nullopt;
        for (auto& v : yv) v *= sx / sy;
        const IncomeVector y(yv);
        const double t = uniform(0.0, 1.0);
        std::vector<double> mix(n);
        for (std::size_t i = 0; i < n; ++i) mix[i] = (1.0 - t) * x.values()[i] + t * y.values()[i];
        const double a = I_(IncomeVector(mix));
        const double b = (1.0 - t) * I_(x) + t * I_(y);
        if (a > b + slack(a, b)) {
            return make_cex(x.values(), y.values(), a, b, "I((1-t)x + ty) <= (1-t)I(x) + tI(y) on sum(x)=sum(y)",
                            {{"t", t}});
        }
        return std::nullopt;
    }

private:
    const InequalityMeasure& I_;
    std::mt19937_64 rng_;
};

FalsificationReport run(const InequalityMeasure& measure, std::string axiom_name, std::size_t trials,
                        std::uint64_t seed, const std::function<Trial(Checker&, std::size_t)>& trial) {
    if (trials < 1) throw ParameterError("trials must be >= 1");
    FalsificationReport report;
    report.axiom = std::move(axiom_name);
    report.measure = measure.name();
    Checker checker(measure, seed);
    for (std::size_t i = 0; i < trials; ++i) {
        auto result = trial(checker, i);
        report.trials_run = i + 1;
        if (result) {
            report.passed = false;
            report.counterexample = std::move(result);
            break;
        }
    }
    return report;
}

}  // namespace

FalsificationReport check_inequality_axiom(const InequalityMeasure& inequality, InequalityAxiom axiom,
                                           std::size_t trials, std::uint64_t seed) {
    const std::string name(to_string(axiom));
    switch (axiom) {
        case InequalityAxiom::I1:
            return run(inequality, name, trials, seed, [](Checker& c, std::size_t) { return c.symmetry(); });
        case InequalityAxiom::I2:
            return run(inequality, name, trials, seed, [](Checker& c, std::size_t) { return c.scale_invariance(); });
        case InequalityAxiom::I3:
            return run(inequality, name, trials, seed, [](Checker& c, std::size_t) { return c.schur(true); });
        case InequalityAxiom::I4:
            return run(inequality, name, trials, seed, [](Checker& c, std::size_t) { return c.replication(); });
        case InequalityAxiom::I5:
            return run(inequality, name, trials, seed, [](Checker& c, std::size_t i) { return c.normalization(i); });
        case InequalityAxiom::I6:
            return run(inequality, name, trials, seed,
                       [](Checker& c, std::size_t) { return c.constant_addition(); });
        case InequalityAxiom::I11:
            return run(inequality, name, trials, seed,
                       [](Checker& c, std::size_t) { return c.constant_sum_convexity(); });
        case InequalityAxiom::I7: {
            // Lorenz compatibility holds exactly when I1-I4 all hold.
            FalsificationReport report;
            report.axiom = name;
            report.measure = inequality.name();
            std::uint64_t sub_seed = seed;
            for (auto part : {InequalityAxiom::I1, InequalityAxiom::I2, InequalityAxiom::I3, InequalityAxiom::I4}) {
                auto sub = check_inequality_axiom(inequality, part, trials, sub_seed++);
                report.trials_run += sub.trials_run;
                if (!sub.passed) {
                    report.passed = false;
                    report.counterexample = std::move(sub.counterexample);
                    report.counterexample->relation =
                        std::string(to_string(part)) + ": " + report.counterexample->relation;
                    break;
                }
            }
            return report;
        }
        case InequalityAxiom::I8:
        case InequalityAxiom::I9:
        case InequalityAxiom::I10:
            throw UnsupportedAxiomError("axiom " + name + " quantifies over partitions and has no sampling check");
    }
    throw ParameterError("unknown inequality axiom");
}

FalsificationReport check_schur_convexity(const InequalityMeasure& inequality, std::size_t trials,
                                          std::uint64_t seed) {
    return run(inequality, "schur_convex", trials, seed, [](Checker& c, std::size_t) { return c.schur(false); });
}

}  // namespace fairrisk
