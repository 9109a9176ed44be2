#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "fairrisk/data.hpp"
#include "fairrisk/errors.hpp"
#include "fairrisk/metrics.hpp"
#include "fairrisk/optim.hpp"

using namespace fairrisk;

namespace {

Dataset load(const std::string& text, const CsvSchema& schema) {
    std::istringstream in(text);
    return load_csv(in, schema);
}

CsvSchema schema(std::string label, std::string sensitive, std::string positive) {
    CsvSchema s;
    s.label_column = std::move(label);
    s.sensitive_columns = {std::move(sensitive)};
    s.positive_label_token = std::move(positive);
    return s;
}

std::string error_of(const std::string& text, const CsvSchema& s) {
    try {
        load(text, s);
    } catch (const InputError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("labels map through the positive token") {
    const auto d = load("age,sex,income\n30,m,yes\n41,f,no\n25,f,yes\n", schema("income", "sex", "yes"));
    CHECK(d.labels == std::vector<int>{1, -1, 1});
    REQUIRE(d.has_categorical_sensitive());
    const auto& s = std::get<CategoricalSensitive>(d.sensitive);
    CHECK(s.codes == std::vector<int>{0, 1, 1});
    CHECK(s.names == std::vector<std::string>{"m", "f"});
    CHECK(d.feature_names == std::vector<std::string>{"age", "sex=m", "sex=f"});
    CHECK(d.features(1, 0) == 41.0);
    CHECK(d.features(1, 2) == 1.0);
}

TEST_CASE("sensitive column can be left out of the features") {
    auto s = schema("income", "sex", "yes");
    s.sensitive_as_feature = false;
    const auto d = load("age,sex,income\n30,m,yes\n41,f,no\n", s);
    CHECK(d.feature_names == std::vector<std::string>{"age"});
}

TEST_CASE("real sensitive column partitions per instance") {
    auto s = schema("y", "fnlwgt", "1");
    s.sensitive_kind = SensitiveKind::Real;
    const auto d = load("x,fnlwgt,y\n1.5,120.5,1\n2.5,98.0,0\n0.5,120.5,1\n", s);
    REQUIRE_FALSE(d.has_categorical_sensitive());
    CHECK(std::get<RealSensitive>(d.sensitive).values == std::vector<double>{120.5, 98.0, 120.5});
    const auto p = partition(d, PartitionMode::PerInstance);
    CHECK(p.num_groups() == 3);
    CHECK_THROWS_AS(partition(d, PartitionMode::Categorical), InputError);
}

TEST_CASE("several sensitive columns form one product key") {
    auto s = schema("y", "a", "1");
    s.sensitive_columns = {"a", "b"};
    const auto d = load("a,b,x,y\nu,p,1,1\nv,p,2,0\nu,q,3,1\nu,p,4,0\n", s);
    const auto& sens = std::get<CategoricalSensitive>(d.sensitive);
    CHECK(sens.names == std::vector<std::string>{"u|p", "v|p", "u|q"});
    CHECK(sens.codes == std::vector<int>{0, 1, 2, 0});
}

TEST_CASE("quoted fields") {
    const auto rows = [] {
        std::istringstream in("a,b\n\"x, y\",\"say \"\"hi\"\"\"\r\n 1 , 2 \n");
        return parse_csv(in);
    }();
    REQUIRE(rows.size() == 3);
    CHECK(rows[1][0] == "x, y");
    CHECK(rows[1][1] == "say \"hi\"");
    CHECK(rows[2][0] == "1");
    CHECK(rows[2][1] == "2");
}

TEST_CASE("ingestion errors name the problem") {
    const auto s = schema("y", "g", "1");
    CHECK(error_of("", s).find("empty") != std::string::npos);
    CHECK(error_of("x,g,y\n", s).find("no data rows") != std::string::npos);
    CHECK(error_of("x,x,g,y\n1,2,a,1\n", s).find("duplicate") != std::string::npos);
    CHECK(error_of("x,g\n1,a\n", s).find("'y'") != std::string::npos);
    const auto missing = error_of("x,g,y\n1,a,1\n,b,0\n", s);
    CHECK(missing.find("row 2") != std::string::npos);
    CHECK(missing.find("'x'") != std::string::npos);
    const auto bad = error_of("x,g,y\n1,a,1\n2x,b,0\n", s);
    CHECK(bad.find("row 2") != std::string::npos);
    CHECK(bad.find("unparseable") != std::string::npos);
    CHECK_FALSE(error_of("x,g,y\n1,a\n", s).empty());
    CHECK_THROWS_AS(load_csv(std::string("/nonexistent/file.csv"), s), InputError);
}

TEST_CASE("feature matrix round-trips through csv") {
    const std::string text = "x1,x2,g,y\n0.1,-3.25e-7,a,1\n123456.789,0.3333333333333333,b,0\n-0.0,1e300,a,1\n";
    auto s = schema("y", "g", "1");
    s.sensitive_as_feature = false;
    const auto d = load(text, s);
    std::ostringstream out;
    write_feature_csv(out, d);
    std::istringstream back(out.str());
    const auto rows = parse_csv(back);
    REQUIRE(rows.size() == d.size() + 1);
    CHECK(rows[0] == std::vector<std::string>{"x1", "x2"});
    for (std::size_t r = 0; r < d.size(); ++r)
        for (std::size_t c = 0; c < d.dims(); ++c) CHECK(std::stod(rows[r + 1][c]) == d.features(r, c));
    CHECK(d.features(0, 0) == 0.1);
    CHECK(d.features(1, 1) == 0.3333333333333333);
}

TEST_CASE("synthetic data is a pure function of the spec") {
    SynthSpec spec;
    spec.seed = 17;
    const auto a = generate_synth(spec);
    const auto b = generate_synth(spec);
    CHECK(a == b);
    spec.seed = 18;
    CHECK_FALSE(a == generate_synth(spec));
    CHECK(a.size() == 1000);
    CHECK(a.dims() == 2);

    SynthSpec bad;
    bad.noise_rates = {0.5, 0.1};
    CHECK_THROWS_AS(generate_synth(bad), ParameterError);
    bad = SynthSpec{};
    bad.group_fractions = {0.7, 0.7};
    CHECK_THROWS_AS(generate_synth(bad), ParameterError);
}

TEST_CASE("noise-free separated synthetic data is learnable") {
    SynthSpec spec;
    spec.m = 200;
    spec.noise_rates = {0.0, 0.0};
    spec.class_means = {{{{{-3.0, 0.0}, {3.0, 0.0}}}, {{{0.0, -3.0}, {0.0, 3.0}}}}};
    const auto d = generate_synth(spec);
    TrainConfig cfg;
    cfg.aggregator = AggregatorSpec::expectation();
    const auto r = train(cfg, d);
    const auto eval = evaluate(r.model, d, partition(d, PartitionMode::Categorical), LossKind::SquaredHinge);
    CHECK(eval.zero_one_risk < 0.05);
}

TEST_CASE("default synthetic benchmark has a subgroup error gap under erm") {
    double gap = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SynthSpec spec;
        spec.seed = seed;
        const auto d = generate_synth(spec);
        TrainConfig cfg;
        cfg.aggregator = AggregatorSpec::expectation();
        const auto r = train(cfg, d);
        const auto eval = evaluate(r.model, d, partition(d, PartitionMode::Categorical), LossKind::SquaredHinge);
        gap += std::abs(eval.subgroup_zero_one[0] - eval.subgroup_zero_one[1]) / 10.0;
    }
    CHECK(gap > 0.05);
}

TEST_CASE("stratified split sizes and disjointness") {
    SynthSpec spec;
    spec.m = 100;
    const auto d = generate_synth(spec);
    const auto s = split(d, 0.8, 3);
    CHECK(s.stratified);
    CHECK(s.train.size() >= 79);
    CHECK(s.train.size() <= 81);
    CHECK(s.train.size() + s.test.size() == 100);

    std::multiset<std::pair<double, double>> all, parts;
    for (std::size_t i = 0; i < d.size(); ++i) all.insert({d.features(i, 0), d.features(i, 1)});
    for (const auto* part : {&s.train, &s.test})
        for (std::size_t i = 0; i < part->size(); ++i) parts.insert({part->features(i, 0), part->features(i, 1)});
    CHECK(all == parts);

    const auto again = split(d, 0.8, 3);
    CHECK(again.train == s.train);
    CHECK_THROWS_AS(split(d, 1.0, 0), ParameterError);
}

TEST_CASE("split falls back to a shuffle for tiny groups") {
    auto s = schema("y", "g", "1");
    const auto d = load("x,g,y\n1,a,1\n2,a,0\n3,a,1\n4,b,0\n5,a,1\n", s);
    const auto r = split(d, 0.6, 1);
    CHECK_FALSE(r.stratified);
    CHECK(r.train.size() == 3);
    CHECK(r.test.size() == 2);
}

TEST_CASE("standardisation") {
    SynthSpec spec;
    spec.m = 300;
    auto d = generate_synth(spec);
    // Add a constant column.
    Matrix wide(d.size(), 3);
    for (std::size_t i = 0; i < d.size(); ++i) {
        wide(i, 0) = d.features(i, 0) * 5 + 10;
        wide(i, 1) = d.features(i, 1);
        wide(i, 2) = 7.0;
    }
    d.features = wide;
    d.feature_names = {"a", "b", "c"};
    const auto sp = split(d, 0.7, 2);
    const auto st = standardize(sp.train, sp.test);
    for (std::size_t c = 0; c < 2; ++c) {
        double mean = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < st.train.size(); ++i) mean += st.train.features(i, c);
        mean /= static_cast<double>(st.train.size());
        for (std::size_t i = 0; i < st.train.size(); ++i) sq += std::pow(st.train.features(i, c) - mean, 2);
        CHECK(std::abs(mean) < 1e-10);
        CHECK(std::abs(std::sqrt(sq / static_cast<double>(st.train.size())) - 1.0) < 1e-10);
    }
    CHECK(st.scaler.stds[2] == 0.0);
    for (std::size_t i = 0; i < st.train.size(); ++i) CHECK(st.train.features(i, 2) == 7.0);

    const auto twice = Scaler::fit(st.train).apply(st.train);
    for (std::size_t i = 0; i < twice.size(); ++i)
        for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(twice.features(i, c) - st.train.features(i, c)) < 1e-10);
    CHECK(st.test.size() == sp.test.size());
}
