#pragma once

// Inequality measures on non-negative income vectors and their correspondence
// with deviation and risk measures:
//
//   I_D(x) = D(x) / E(x)        (0 when E(x) = 0)
//   D_I(x) = E(x) I(x)
//   R_I(x) = E(x) (1 + I(x))
//
// Every vector is read as a random variable with probability 1/n per entry.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairrisk/falsification.hpp"
#include "fairrisk/riskvar.hpp"

namespace fairrisk {

/// Finite, non-negative entries; at least one. InputError otherwise.
class IncomeVector {
public:
    explicit IncomeVector(std::vector<double> entries);

    std::span<const double> values() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    double mean() const;
    DiscreteRandomVariable as_variable() const;

private:
    std::vector<double> entries_;
};

enum class DeviationKind { StandardDeviation, CvarDeviation };

struct DeviationSpec {
    DeviationKind kind = DeviationKind::StandardDeviation;
    double alpha = 0.5;  ///< CvarDeviation only

    static DeviationSpec standard_deviation() { return {}; }
    static DeviationSpec cvar_deviation(double alpha) { return {DeviationKind::CvarDeviation, alpha}; }
    double operator()(const IncomeVector& x) const;
};

using DeviationFunction = std::function<double(const IncomeVector&)>;

double inequality_from_deviation(const IncomeVector& x, const DeviationSpec& deviation);
double inequality_from_deviation(const IncomeVector& x, const DeviationFunction& deviation);

/// A named inequality functional.
class InequalityMeasure {
public:
    /// sigma / mean.
    static InequalityMeasure coefficient_of_variation();
    /// CVaR_alpha deviation over the mean.
    static InequalityMeasure cvar_induced(double alpha);
    /// (max - min) / mean.
    static InequalityMeasure spread_over_mean();
    /// I_D for an arbitrary deviation functional.
    static InequalityMeasure from_deviation(std::string name, DeviationFunction deviation);
    /// Any functional; used for measures built from a risk measure.
    static InequalityMeasure custom(std::string name, std::function<double(const IncomeVector&)> fn);

    double operator()(const IncomeVector& x) const { return fn_(x); }
    const std::string& name() const noexcept { return name_; }

private:
    InequalityMeasure(std::string name, std::function<double(const IncomeVector&)> fn)
        : name_(std::move(name)), fn_(std::move(fn)) {}

    std::string name_;
    std::function<double(const IncomeVector&)> fn_;
};

double deviation_from_inequality(const IncomeVector& x, const InequalityMeasure& inequality);
double risk_from_inequality(const IncomeVector& x, const InequalityMeasure& inequality);

struct LorenzKnot {
    double p;
    double share;
};

/// Piecewise-linear Lorenz curve with knots at k/n.
struct LorenzCurve {
    std::vector<LorenzKnot> knots;

    /// Linear interpolation between knots, p in [0,1].
    double at(double p) const;
};

/// UndefinedMetricError when the mean is zero.
LorenzCurve lorenz_curve(const IncomeVector& x);

/// x is majorized by y: equal totals and every top-k partial sum of x is at
/// most that of y (tolerance 1e-12 relative). ParameterError on length mismatch.
bool majorized_by(const IncomeVector& x, const IncomeVector& y);

/// L_x(p) >= L_y(p) at every knot of either curve.
bool lorenz_dominates(const IncomeVector& x, const IncomeVector& y);

/// True if y is a rearrangement of x.
bool is_permutation_of(const IncomeVector& x, const IncomeVector& y);

struct MajorizationPair {
    IncomeVector x;  ///< majorized by y
    IncomeVector y;
};

/**
 * Draws y at random and derives x from it by mean-preserving transfers from
 * a richer to a poorer entry that never reverse their order, so x is
 * majorized by y by construction.
 */
MajorizationPair sample_majorization_pair(std::mt19937_64& rng, std::size_t n);

enum class InequalityAxiom { I1, I2, I3, I4, I5, I6, I7, I8, I9, I10, I11 };

std::string_view to_string(InequalityAxiom axiom);
InequalityAxiom parse_inequality_axiom(std::string_view tag);

/// The axioms check_inequality_axiom can test.
inline constexpr InequalityAxiom kCheckableInequalityAxioms[] = {
    InequalityAxiom::I1, InequalityAxiom::I2, InequalityAxiom::I3, InequalityAxiom::I4,
    InequalityAxiom::I5, InequalityAxiom::I6, InequalityAxiom::I7, InequalityAxiom::I11};

/**
 * Sampling falsifier for inequality axioms:
 *   I1 symmetry, I2 scale invariance, I3 strict Schur-convexity,
 *   I4 replication invariance, I5 normalisation, I6 constant addition,
 *   I7 as I1 and I2 and I3 and I4, I11 convexity on constant-sum slices.
 * UnsupportedAxiomError for I8-I10.
 */
FalsificationReport check_inequality_axiom(const InequalityMeasure& inequality, InequalityAxiom axiom,
                                           std::size_t trials, std::uint64_t seed);

/// Non-strict Schur-convexity: x majorized by y implies I(x) <= I(y) + slack.
FalsificationReport check_schur_convexity(const InequalityMeasure& inequality, std::size_t trials,
                                          std::uint64_t seed);

}  // namespace fairrisk
