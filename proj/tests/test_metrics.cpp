#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "fairrisk/errors.hpp"
#include "fairrisk/metrics.hpp"

using namespace fairrisk;

namespace {

GroupPartition groups_of(const std::vector<std::size_t>& ids) {
    GroupPartition p;
    p.group_ids = ids;
    const std::size_t n = *std::max_element(ids.begin(), ids.end()) + 1;
    p.group_sizes.assign(n, 0);
    for (auto g : ids) ++p.group_sizes[g];
    for (auto s : p.group_sizes) p.group_probs.push_back(static_cast<double>(s) / static_cast<double>(ids.size()));
    return p;
}

double brute_disagreement(const std::vector<double>& s, const std::vector<int>& y) {
    double bad = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (y[i] != 1) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j] != -1) continue;
            pairs += 1.0;
            if (s[i] < s[j]) bad += 1.0;
            else if (s[i] == s[j]) bad += 0.5;
        }
    }
    return bad / pairs;
}

}  // namespace

TEST_CASE("mean difference") {
    const std::vector<int> y{1, -1, 1, -1, 1, 1, -1, -1, 1, -1};
    const auto g = groups_of({0, 0, 0, 0, 0, 1, 1, 1, 1, 1});
    CHECK(mean_difference_01(y, y, g) == 0.0);

    // Group 0 errs on 2 of 10 rows, group 1 on 5 of 10.
    std::vector<int> labels(20, 1), preds(20, 1);
    std::vector<std::size_t> ids(20, 0);
    for (int i = 10; i < 20; ++i) ids[i] = 1;
    preds[0] = preds[1] = -1;
    for (int i = 10; i < 15; ++i) preds[i] = -1;
    const auto g2 = groups_of(ids);
    CHECK(mean_difference_01(preds, labels, g2) == doctest::Approx(0.3).epsilon(1e-15));

    std::vector<std::size_t> swapped(ids);
    for (auto& s : swapped) s = 1 - s;
    CHECK(mean_difference_01(preds, labels, groups_of(swapped)) == mean_difference_01(preds, labels, g2));

    CHECK_THROWS_AS(mean_difference_01(y, y, groups_of({0, 0, 1, 1, 2, 2, 0, 1, 2, 0})), ParameterError);
}

TEST_CASE("demographic parity violation") {
    const auto g = groups_of({0, 0, 1, 1});
    CHECK(dp_violation(std::vector<int>{1, -1, -1, 1}, g) == 0.0);
    CHECK(dp_violation(std::vector<int>{1, 1, -1, -1}, g) == 1.0);

    // +1 rates 0.2, 0.5, 0.9 over groups of ten.
    std::vector<int> preds(30, -1);
    std::vector<std::size_t> ids(30);
    for (int i = 0; i < 30; ++i) ids[i] = static_cast<std::size_t>(i / 10);
    for (int i = 0; i < 2; ++i) preds[i] = 1;
    for (int i = 10; i < 15; ++i) preds[i] = 1;
    for (int i = 20; i < 29; ++i) preds[i] = 1;
    CHECK(dp_violation(preds, groups_of(ids)) == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("covariance") {
    const std::vector<double> s{0, 1, 0, 1, 1, 0};
    CHECK(covariance_metric(std::vector<double>(6, 1.0), s) == 0.0);
    CHECK(covariance_metric(s, s) == doctest::Approx(0.25).epsilon(1e-15));

    std::mt19937_64 rng(31);
    const std::size_t m = 20000;
    std::vector<double> sens(m);
    for (std::size_t i = 0; i < m; ++i) sens[i] = static_cast<double>(i % 2);
    std::vector<double> a(sens);
    std::shuffle(a.begin(), a.end(), rng);
    // Permutation null: sd of the covariance is about 0.25 / sqrt(m).
    CHECK(std::abs(covariance_metric(a, sens)) < 3.0 * 0.25 / std::sqrt(static_cast<double>(m)));
}

TEST_CASE("mutual information") {
    const auto g = groups_of({0, 0, 1, 1});
    CHECK(mutual_information_metric(std::vector<int>{1, -1, 1, -1}, g) == doctest::Approx(0.0));
    CHECK(mutual_information_metric(std::vector<int>{1, 1, -1, -1}, g) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

    std::mt19937_64 rng(32);
    for (int t = 0; t < 200; ++t) {
        const std::size_t m = 20 + static_cast<std::size_t>(t);
        const std::size_t n = 2 + static_cast<std::size_t>(t % 4);
        std::vector<std::size_t> ids(m);
        std::vector<int> preds(m);
        for (std::size_t i = 0; i < m; ++i) {
            ids[i] = i % n;
            preds[i] = std::bernoulli_distribution(0.3)(rng) ? 1 : -1;
        }
        const double mi = mutual_information_metric(preds, groups_of(ids));
        CHECK(mi >= 0.0);
        CHECK(mi <= std::min(std::log(2.0), std::log(static_cast<double>(n))) + 1e-12);
    }
}

TEST_CASE("pairwise disagreement") {
    const std::vector<int> y{1, 1, -1, -1};
    CHECK(pairwise_disagreement(std::vector<double>{3, 2, 1, 0}, y) == 0.0);
    CHECK(pairwise_disagreement(std::vector<double>{0, 1, 2, 3}, y) == 1.0);
    CHECK(pairwise_disagreement(std::vector<double>(4, 0.7), y) == 0.5);
    CHECK_THROWS_AS(pairwise_disagreement(std::vector<double>{1, 2}, std::vector<int>{1, 1}), UndefinedMetricError);

    std::mt19937_64 rng(33);
    for (int t = 0; t < 200; ++t) {
        const std::size_t m = 2 + static_cast<std::size_t>(t % 60);
        std::vector<double> s(m);
        std::vector<int> labels(m);
        for (std::size_t i = 0; i < m; ++i) {
            s[i] = static_cast<double>(std::uniform_int_distribution<int>(-4, 4)(rng));
            labels[i] = std::bernoulli_distribution(0.5)(rng) ? 1 : -1;
        }
        labels[0] = 1;
        labels[1] = -1;
        CHECK(pairwise_disagreement(s, labels) == doctest::Approx(brute_disagreement(s, labels)).epsilon(1e-14));
    }
}

TEST_CASE("pairwise disagreement complements under negation without ties") {
    std::mt19937_64 rng(34);
    for (int t = 0; t < 100; ++t) {
        const std::size_t m = 10 + static_cast<std::size_t>(t);
        std::vector<double> s(m), neg(m);
        std::vector<int> labels(m);
        for (std::size_t i = 0; i < m; ++i) {
            s[i] = std::normal_distribution<double>()(rng);
            neg[i] = -s[i];
            labels[i] = i % 3 == 0 ? 1 : -1;
        }
        CHECK(pairwise_disagreement(s, labels) + pairwise_disagreement(neg, labels) == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("subgroup loss gap") {
    CHECK(subgroup_loss_gap(DiscreteRandomVariable::constant(2.0)) == 0.0);
    const std::vector<double> one_three{1, 3};
    const auto z = DiscreteRandomVariable::uniform(one_three);
    CHECK(subgroup_loss_gap(z) == 2.0);
    CHECK(subgroup_loss_gap(z) == doctest::Approx(2.0 * sd_deviation(z)).epsilon(1e-15));
    CHECK(subgroup_loss_gap(DiscreteRandomVariable({{9.0, 0.0}, {1.0, 0.5}, {2.0, 0.5}})) == 1.0);
}

TEST_CASE("metrics are invariant under row permutation") {
    std::mt19937_64 rng(35);
    const std::size_t m = 300;
    Dataset d;
    d.features = Matrix(m, 2);
    d.labels.resize(m);
    std::vector<int> codes(m);
    std::normal_distribution<double> n01;
    for (std::size_t i = 0; i < m; ++i) {
        d.features(i, 0) = n01(rng);
        d.features(i, 1) = n01(rng);
        d.labels[i] = d.features(i, 0) + 0.5 * n01(rng) > 0 ? 1 : -1;
        codes[i] = static_cast<int>(i % 3);
    }
    d.sensitive = CategoricalSensitive{codes, {}};
    const LinearModel model{{1.0, 0.3}, -0.1};
    const auto r1 = evaluate(model, d, partition(d, PartitionMode::Categorical), LossKind::Hinge);

    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto shuffled = d.subset(perm);
    const auto r2 = evaluate(model, shuffled, partition(shuffled, PartitionMode::Categorical), LossKind::Hinge);

    CHECK(r1.zero_one_risk == doctest::Approx(r2.zero_one_risk).epsilon(1e-14));
    CHECK(r1.dp_violation == doctest::Approx(r2.dp_violation).epsilon(1e-14));
    CHECK(r1.covariance == doctest::Approx(r2.covariance).epsilon(1e-12));
    CHECK(r1.mutual_information_nats == doctest::Approx(r2.mutual_information_nats).epsilon(1e-12));
    CHECK(*r1.pairwise_disagreement == doctest::Approx(*r2.pairwise_disagreement).epsilon(1e-14));
    CHECK(r1.subgroup_loss_gap == doctest::Approx(r2.subgroup_loss_gap).epsilon(1e-12));
    CHECK(r1.weighted_risk == doctest::Approx(r2.weighted_risk).epsilon(1e-12));
    CHECK_FALSE(r1.mean_difference.has_value());
    CHECK(r1.dp_violation >= 0.0);
    CHECK(r1.dp_violation <= 1.0);
}

TEST_CASE("predictions use sign with zero mapped to +1") {
    Dataset d;
    d.features = Matrix(3, 1);
    d.features(0, 0) = -1;
    d.features(1, 0) = 0;
    d.features(2, 0) = 2;
    d.labels = {1, 1, 1};
    d.sensitive = CategoricalSensitive{{0, 0, 0}, {}};
    CHECK(predictions(LinearModel{{1.0}, 0.0}, d) == std::vector<int>{-1, 1, 1});
}
