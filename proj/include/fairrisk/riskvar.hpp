#pragma once

// Finite discrete random variables and the risk / deviation measures used to
// aggregate subgroup risks.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fairrisk {

struct Atom {
    double value;
    double prob;
};

/**
 * A random variable with finitely many outcomes.
 *
 * Invariants (checked on construction, InputError otherwise): at least one
 * atom, every value finite, every probability in [0,1], probabilities summing
 * to 1 within 1e-12. Zero-probability atoms are kept but ignored by every
 * measure.
 */
class DiscreteRandomVariable {
public:
    explicit DiscreteRandomVariable(std::vector<Atom> atoms);

    /// Equal probability 1/n on each value.
    static DiscreteRandomVariable uniform(std::span<const double> values);
    static DiscreteRandomVariable constant(double value);
    /// Pairs values[i] with probs[i].
    static DiscreteRandomVariable from_columns(std::span<const double> values,
                                              std::span<const double> probs);

    const std::vector<Atom>& atoms() const noexcept { return atoms_; }
    std::size_t size() const noexcept { return atoms_.size(); }

    std::vector<double> values() const;
    std::vector<double> probs() const;

    /// Positive-probability atoms sorted by value, equal values merged.
    std::vector<Atom> merged() const;

    /// True if every positive-probability atom carries the same value.
    bool is_constant() const;

private:
    std::vector<Atom> atoms_;
};

enum class AggregatorKind { Expectation, CVaR, SDPenalty, TopK, Max };

/// Subgroup risk aggregator R. Only the parameter matching `kind` is read.
struct AggregatorSpec {
    AggregatorKind kind = AggregatorKind::Expectation;
    double alpha = 0.5;
    double lambda = 0.0;
    std::size_t k = 1;

    static AggregatorSpec expectation() { return {}; }
    static AggregatorSpec cvar(double alpha);
    static AggregatorSpec sd_penalty(double lambda);
    static AggregatorSpec top_k(std::size_t k);
    static AggregatorSpec max();

    /// Throws ParameterError when a parameter leaves its domain.
    void validate() const;
    std::string describe() const;
};

std::string_view to_string(AggregatorKind kind);

double expectation(const DiscreteRandomVariable& z);

/// Lower quantile inf{ z : F(z) >= alpha }.
double quantile(const DiscreteRandomVariable& z, double alpha);

/// rho + E[Z - rho]_+ / (1 - alpha), the function minimised over rho by cvar().
double cvar_variational(const DiscreteRandomVariable& z, double alpha, double rho);

/// Conditional value at risk: exact minimum of cvar_variational over rho.
double cvar(const DiscreteRandomVariable& z, double alpha);

/// CVaR_alpha(Z) - E(Z).
double cvar_deviation(const DiscreteRandomVariable& z, double alpha);

double variance(const DiscreteRandomVariable& z);
double sd_deviation(const DiscreteRandomVariable& z);

double max_value(const DiscreteRandomVariable& z);
double min_value(const DiscreteRandomVariable& z);

/// Mean of the k largest atom values. Requires equal probabilities and
/// k <= size().
double top_k_mean(const DiscreteRandomVariable& z, std::size_t k);

double aggregate(const DiscreteRandomVariable& z, const AggregatorSpec& spec);

/// aggregate(z, spec) - expectation(z).
double deviation(const DiscreteRandomVariable& z, const AggregatorSpec& spec);

}  // namespace fairrisk
