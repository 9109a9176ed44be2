#include "fairrisk/cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "fairrisk/axioms.hpp"
#include "fairrisk/data.hpp"
#include "fairrisk/errors.hpp"
#include "fairrisk/inequality.hpp"
#include "fairrisk/metrics.hpp"
#include "fairrisk/optim.hpp"

namespace fairrisk::cli {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct DataOptions {
    std::string data = "synth";
    std::size_t synth_m = 1000;
    std::string label_col;
    std::vector<std::string> sensitive_cols;
    std::string positive_token;
    std::string sensitive_kind = "categorical";
    bool exclude_sensitive_feature = false;
    double train_frac = 0.8;
    bool no_standardize = false;
};

struct TrainOptions {
    std::string aggregator = "cvar";
    double alpha = 0.9;
    double lambda = 1.0;
    std::size_t k = 1;
    std::string loss = "squared_hinge";
    std::size_t epochs = 300;
    double lr = 0.5;
    double l2 = 1e-4;
    std::string step_decay = "inv_sqrt";
    std::uint64_t seed = 0;
};

void add_data_flags(CLI::App& cmd, DataOptions& o) {
    cmd.add_option("--data", o.data, "'synth' or a CSV path")->capture_default_str();
    cmd.add_option("--synth-m", o.synth_m, "Rows in the synthetic benchmark")->capture_default_str();
    cmd.add_option("--label-col", o.label_col, "CSV label column");
    cmd.add_option("--sensitive-col", o.sensitive_cols, "CSV sensitive column(s)")->delimiter(',');
    cmd.add_option("--positive-token", o.positive_token, "Label value mapped to +1");
    cmd.add_option("--sensitive-kind", o.sensitive_kind, "categorical or real")
        ->check(CLI::IsMember({"categorical", "real"}))
        ->capture_default_str();
    cmd.add_flag("--exclude-sensitive-feature", o.exclude_sensitive_feature,
                 "Do not keep the sensitive column among the features");
    cmd.add_option("--train-frac", o.train_frac, "Fraction of rows used for training")->capture_default_str();
    cmd.add_flag("--no-standardize", o.no_standardize, "Skip feature standardisation");
}

void add_train_flags(CLI::App& cmd, TrainOptions& o, bool with_aggregator) {
    if (with_aggregator) {
        cmd.add_option("--aggregator", o.aggregator, "erm, cvar, sd, topk or max")
            ->check(CLI::IsMember({"erm", "cvar", "sd", "topk", "max"}))
            ->capture_default_str();
        cmd.add_option("--alpha", o.alpha, "CVaR level in (0,1)")->capture_default_str();
        cmd.add_option("--lambda", o.lambda, "SD penalty weight")->capture_default_str();
        cmd.add_option("--k", o.k, "Top-k count")->capture_default_str();
    }
    cmd.add_option("--loss", o.loss, "hinge, squared_hinge, logistic or linear")
        ->check(CLI::IsMember({"hinge", "squared_hinge", "logistic", "linear"}))
        ->capture_default_str();
    cmd.add_option("--epochs", o.epochs)->capture_default_str();
    cmd.add_option("--lr", o.lr, "Initial step size")->capture_default_str();
    cmd.add_option("--l2", o.l2, "L2 regularisation on the weights")->capture_default_str();
    cmd.add_option("--step-decay", o.step_decay)
        ->check(CLI::IsMember({"constant", "inv_sqrt"}))
        ->capture_default_str();
    cmd.add_option("--seed", o.seed)->capture_default_str();
}

AggregatorSpec make_aggregator(const TrainOptions& o) {
    if (o.aggregator == "erm") return AggregatorSpec::expectation();
    if (o.aggregator == "cvar") return AggregatorSpec::cvar(o.alpha);
    if (o.aggregator == "sd") return AggregatorSpec::sd_penalty(o.lambda);
    if (o.aggregator == "topk") return AggregatorSpec::top_k(o.k);
    if (o.aggregator == "max") return AggregatorSpec::max();
    throw ParameterError("unknown aggregator '" + o.aggregator + "'");
}

TrainConfig make_config(const TrainOptions& o, PartitionMode mode) {
    TrainConfig cfg;
    cfg.aggregator = make_aggregator(o);
    cfg.loss = parse_loss(o.loss);
    cfg.l2_reg = o.l2;
    cfg.epochs = o.epochs;
    cfg.step_size = o.lr;
    cfg.step_decay = o.step_decay == "constant" ? StepDecay::Constant : StepDecay::InvSqrt;
    cfg.seed = o.seed;
    cfg.partition_mode = mode;
    cfg.validate();
    return cfg;
}

struct PreparedData {
    Dataset train;
    Dataset test;
    PartitionMode mode = PartitionMode::Categorical;
    std::size_t rows = 0;
    bool stratified = true;
};

PreparedData prepare_data(const DataOptions& o, std::uint64_t seed) {
    if (!(o.train_frac > 0.0 && o.train_frac < 1.0)) throw ParameterError("--train-frac must lie in (0,1)");
    Dataset full;
    if (o.data == "synth") {
        SynthSpec spec;
        spec.m = o.synth_m;
        spec.seed = seed;
        full = generate_synth(spec);
    } else {
        if (o.label_col.empty() || o.sensitive_cols.empty()) {
            throw ParameterError("CSV input needs --label-col and --sensitive-col");
        }
        CsvSchema schema;
        schema.label_column = o.label_col;
        schema.sensitive_columns = o.sensitive_cols;
        schema.positive_label_token = o.positive_token;
        schema.sensitive_kind = o.sensitive_kind == "real" ? SensitiveKind::Real : SensitiveKind::Categorical;
        schema.sensitive_as_feature = !o.exclude_sensitive_feature;
        full = load_csv(o.data, schema);
    }
    PreparedData p;
    p.rows = full.size();
    p.mode = full.has_categorical_sensitive() ? PartitionMode::Categorical : PartitionMode::PerInstance;
    auto parts = split(full, o.train_frac, seed);
    p.stratified = parts.stratified;
    if (o.no_standardize) {
        p.train = std::move(parts.train);
        p.test = std::move(parts.test);
    } else {
        auto std_parts = standardize(parts.train, parts.test);
        p.train = std::move(std_parts.train);
        p.test = std::move(std_parts.test);
    }
    return p;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json to_json(const DiscreteRandomVariable& z) {
    json atoms = json::array();
    for (const auto& a : z.atoms()) atoms.push_back({{"value", a.value}, {"prob", a.prob}});
    return atoms;
}

json to_json(const EvaluationReport& r) {
    return {
        {"zero_one_risk", r.zero_one_risk},
        {"subgroup_zero_one", r.subgroup_zero_one},
        {"mean_difference", optional_json(r.mean_difference)},
        {"dp_violation", r.dp_violation},
        {"covariance", r.covariance},
        {"mutual_information_nats", r.mutual_information_nats},
        {"pairwise_disagreement", optional_json(r.pairwise_disagreement)},
        {"subgroup_loss_gap", r.subgroup_loss_gap},
        {"weighted_risk", r.weighted_risk},
    };
}

json to_json(const TrainReport& r) {
    return {
        {"model", {{"weights", r.model.weights}, {"intercept", r.model.intercept}}},
        {"rho", optional_json(r.rho)},
        {"objective_trace", r.objective_trace},
        {"best_epoch", r.best_epoch},
        {"final_subgroup_risks", to_json(r.final_subgroup_risks)},
        {"metrics", r.metrics},
        {"baseline", r.baseline},
    };
}

json to_json(const Counterexample& c) {
    return {
        {"relation", c.relation}, {"lhs", c.lhs},         {"rhs", c.rhs},
        {"probs", c.probs},       {"z", c.z},             {"z_prime", c.z_prime},
        {"parameters", c.parameters},
    };
}

/// Writes to --output when set, otherwise to `out`.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw InputError("cannot open output file '" + path + "'");
        }
        stream_ = path.empty() ? &fallback : &file_;
    }
    std::ostream& stream() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_ = nullptr;
};

int cmd_train(const DataOptions& data_opts, const TrainOptions& train_opts, const std::string& output,
              std::ostream& out) {
    const auto start = Clock::now();
    make_aggregator(train_opts).validate();
    auto data = prepare_data(data_opts, train_opts.seed);
    const double load_seconds = seconds_since(start);
    const auto cfg = make_config(train_opts, data.mode);

    const auto train_start = Clock::now();
    const auto report = train(cfg, data.train);
    const double train_seconds = seconds_since(train_start);

    const auto train_groups = partition(data.train, data.mode);
    const auto test_groups = partition(data.test, data.mode);

    json artifact = {
        {"tool", kToolName},
        {"version", kVersion},
        {"seed", train_opts.seed},
        {"config",
         {{"aggregator", train_opts.aggregator},
          {"aggregator_spec", cfg.aggregator.describe()},
          {"alpha", train_opts.alpha},
          {"lambda", train_opts.lambda},
          {"k", train_opts.k},
          {"loss", train_opts.loss},
          {"epochs", train_opts.epochs},
          {"lr", train_opts.lr},
          {"l2", train_opts.l2},
          {"step_decay", train_opts.step_decay},
          {"partition_mode", to_string(cfg.aggregator.kind == AggregatorKind::TopK ? PartitionMode::PerInstance
                                                                                    : data.mode)},
          {"train_frac", data_opts.train_frac},
          {"standardize", !data_opts.no_standardize}}},
        {"data",
         {{"source", data_opts.data},
          {"rows", data.rows},
          {"train_rows", data.train.size()},
          {"test_rows", data.test.size()},
          {"features", data.train.dims()},
          {"stratified_split", data.stratified}}},
        {"train_report", to_json(report)},
        {"evaluation",
         {{"train", to_json(evaluate(report.model, data.train, train_groups, cfg.loss))},
          {"test", to_json(evaluate(report.model, data.test, test_groups, cfg.loss))}}},
        {"timings",
         {{"load_seconds", load_seconds}, {"train_seconds", train_seconds}, {"total_seconds", seconds_since(start)}}},
    };
    Sink sink(output, out);
    sink.stream() << artifact.dump(2) << '\n';
    return kExitOk;
}

std::string csv_number(double v) {
    std::ostringstream s;
    s << std::setprecision(10) << v;
    return s.str();
}

std::string csv_optional(const std::optional<double>& v) { return v ? csv_number(*v) : std::string(); }

int cmd_sweep(const DataOptions& data_opts, const TrainOptions& train_opts, std::vector<double> alphas,
              const std::string& eval_split, const std::string& output, std::ostream& out, std::ostream& err) {
    for (double a : alphas) AggregatorSpec::cvar(a);
    std::sort(alphas.begin(), alphas.end());
    auto data = prepare_data(data_opts, train_opts.seed);
    TrainOptions base = train_opts;
    base.aggregator = "cvar";

    // One worker per alpha; run i gets seed + i.
    std::vector<std::future<TrainReport>> runs;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        TrainOptions o = base;
        o.alpha = alphas[i];
        o.seed = train_opts.seed + i;
        const TrainConfig cfg = make_config(o, data.mode);
        runs.push_back(std::async(std::launch::async, [cfg, &data] { return train(cfg, data.train); }));
    }

    const Dataset& eval_data = eval_split == "test" ? data.test : data.train;
    const auto groups = partition(eval_data, data.mode);
    const LossKind loss = parse_loss(train_opts.loss);

    Sink sink(output, out);
    auto& os = sink.stream();
    os << kSweepHeader << '\n';
    for (std::size_t i = 0; i < runs.size(); ++i) {
        TrainReport report;
        try {
            report = runs[i].get();
        } catch (const Error& e) {
            os.flush();
            err << "sweep failed at alpha=" << alphas[i] << ": " << e.what() << '\n';
            for (std::size_t j = i + 1; j < runs.size(); ++j) {
                try {
                    runs[j].get();
                } catch (const Error&) {
                }
            }
            return kExitNumerical;
        }
        const auto ev = evaluate(report.model, eval_data, groups, loss);
        os << csv_number(alphas[i]) << ',' << csv_number(ev.weighted_risk) << ','
           << csv_number(ev.subgroup_loss_gap) << ',' << csv_number(ev.dp_violation) << ','
           << csv_optional(ev.mean_difference) << ',' << csv_optional(ev.pairwise_disagreement) << '\n';
        os.flush();
    }
    return kExitOk;
}

enum class Expect { Pass, Fail, Either };

const char* to_string(Expect e) {
    switch (e) {
        case Expect::Pass: return "pass";
        case Expect::Fail: return "fail";
        case Expect::Either: return "either";
    }
    return "either";
}

struct MeasureTag {
    std::string family;  // cvar, sd, expectation
    double parameter = 0.0;
};

MeasureTag parse_measure(const std::string& tag) {
    const auto colon = tag.find(':');
    MeasureTag m;
    m.family = tag.substr(0, colon);
    if (m.family == "expectation") {
        if (colon != std::string::npos) throw ParameterError("'expectation' takes no parameter");
        return m;
    }
    if (m.family != "cvar" && m.family != "sd") throw ParameterError("unknown measure '" + tag + "'");
    if (colon == std::string::npos) throw ParameterError("measure '" + tag + "' needs a parameter, e.g. cvar:0.7");
    try {
        std::size_t used = 0;
        const std::string param = tag.substr(colon + 1);
        m.parameter = std::stod(param, &used);
        if (used != param.size()) throw std::invalid_argument(param);
    } catch (const std::exception&) {
        throw ParameterError("cannot parse parameter of measure '" + tag + "'");
    }
    return m;
}

// Expected outcomes of the falsifiers, derived from the measures' algebra:
// CVaR is coherent and averse; E + lambda*sigma is convex but not monotone
// once lambda >= 1; the expectation is not averse. The CVaR-induced
// inequality measure is Schur-convex but not strictly so.
Expect expected_fairness(const MeasureTag& m, FairnessAxiom a) {
    if (m.family == "cvar") return Expect::Pass;
    const bool degenerate = m.family == "expectation" || m.parameter == 0.0;
    if (degenerate) {
        return (a == FairnessAxiom::F6 || a == FairnessAxiom::F9) ? Expect::Fail : Expect::Pass;
    }
    if (a == FairnessAxiom::F3) return m.parameter >= 1.0 ? Expect::Fail : Expect::Either;
    return Expect::Pass;
}

Expect expected_inequality(const MeasureTag& m, InequalityAxiom a) {
    const bool strict_schur = a == InequalityAxiom::I3 || a == InequalityAxiom::I7;
    if (m.family == "cvar") return strict_schur ? Expect::Fail : Expect::Pass;
    const bool degenerate = m.family == "expectation" || m.parameter == 0.0;
    if (degenerate) return (strict_schur || a == InequalityAxiom::I5) ? Expect::Fail : Expect::Pass;
    return Expect::Pass;
}

InequalityMeasure inequality_for(const MeasureTag& m) {
    if (m.family == "cvar") return InequalityMeasure::cvar_induced(m.parameter);
    if (m.family == "sd") {
        const double lambda = m.parameter;
        std::ostringstream name;
        name << "sd_over_mean(lambda=" << lambda << ")";
        return InequalityMeasure::from_deviation(name.str(), [lambda](const IncomeVector& x) {
            return lambda * sd_deviation(x.as_variable());
        });
    }
    return InequalityMeasure::from_deviation("zero_deviation", [](const IncomeVector&) { return 0.0; });
}

AggregatorSpec aggregator_for(const MeasureTag& m) {
    if (m.family == "cvar") return AggregatorSpec::cvar(m.parameter);
    if (m.family == "sd") return AggregatorSpec::sd_penalty(m.parameter);
    return AggregatorSpec::expectation();
}

json report_json(const FalsificationReport& r, Expect expected) {
    const bool matches = expected == Expect::Either || (expected == Expect::Pass) == r.passed;
    json j = {
        {"axiom", r.axiom},
        {"measure", r.measure},
        {"passed", r.passed},
        {"trials_run", r.trials_run},
        {"expected", to_string(expected)},
        {"matches_expectation", matches},
        {"counterexample", r.counterexample ? to_json(*r.counterexample) : json(nullptr)},
    };
    return j;
}

int cmd_axioms(const std::string& measure_tag, const std::string& suite, std::size_t trials,
               std::uint64_t seed, const std::string& output, std::ostream& out) {
    if (trials < 1) throw ParameterError("--trials must be >= 1");
    const MeasureTag m = parse_measure(measure_tag);
    json results = json::array();
    bool all_expected = true;
    if (suite == "fairness") {
        const auto agg = aggregator_for(m);
        for (FairnessAxiom a : kAllFairnessAxioms) {
            const auto r = check_axiom(agg, a, trials, seed);
            auto j = report_json(r, expected_fairness(m, a));
            all_expected = all_expected && j["matches_expectation"].get<bool>();
            results.push_back(std::move(j));
        }
    } else {
        const auto ineq = inequality_for(m);
        for (InequalityAxiom a : kCheckableInequalityAxioms) {
            const auto r = check_inequality_axiom(ineq, a, trials, seed);
            auto j = report_json(r, expected_inequality(m, a));
            all_expected = all_expected && j["matches_expectation"].get<bool>();
            results.push_back(std::move(j));
        }
    }
    const json doc = {
        {"tool", kToolName},   {"version", kVersion}, {"measure", measure_tag},
        {"suite", suite},      {"trials", trials},    {"seed", seed},
        {"results", results},  {"all_as_expected", all_expected},
    };
    Sink sink(output, out);
    sink.stream() << doc.dump(2) << '\n';
    return all_expected ? kExitOk : kExitAxiomMismatch;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fairness-aware linear classification with risk-measure aggregation of subgroup risks",
                 std::string(kToolName)};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    DataOptions data_opts;
    TrainOptions train_opts;
    std::string output;

    auto* train_cmd = app.add_subcommand("train", "Train one model and emit a JSON run artifact");
    add_data_flags(*train_cmd, data_opts);
    add_train_flags(*train_cmd, train_opts, true);
    train_cmd->add_option("--output", output, "Write JSON here instead of stdout");

    std::vector<double> alphas;
    std::string eval_split = "train";
    auto* sweep_cmd = app.add_subcommand("sweep", "Train CVaR models over several alphas and emit CSV");
    add_data_flags(*sweep_cmd, data_opts);
    add_train_flags(*sweep_cmd, train_opts, false);
    sweep_cmd->add_option("--alphas", alphas, "Comma-separated CVaR levels")->delimiter(',')->required();
    sweep_cmd->add_option("--eval-split", eval_split, "Split the metrics are computed on")
        ->check(CLI::IsMember({"train", "test"}))
        ->capture_default_str();
    sweep_cmd->add_option("--output", output, "Write CSV here instead of stdout");

    std::string measure;
    std::string suite = "fairness";
    std::size_t trials = 1000;
    std::uint64_t axiom_seed = 0;
    auto* axioms_cmd = app.add_subcommand("axioms", "Run the axiom falsifiers for a measure");
    axioms_cmd->add_option("--measure", measure, "cvar:<alpha>, sd:<lambda> or expectation")->required();
    axioms_cmd->add_option("--suite", suite, "fairness or inequality")
        ->check(CLI::IsMember({"fairness", "inequality"}))
        ->capture_default_str();
    axioms_cmd->add_option("--trials", trials)->capture_default_str();
    axioms_cmd->add_option("--seed", axiom_seed)->capture_default_str();
    axioms_cmd->add_option("--output", output, "Write JSON here instead of stdout");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (*train_cmd) return cmd_train(data_opts, train_opts, output, out);
        if (*sweep_cmd) return cmd_sweep(data_opts, train_opts, alphas, eval_split, output, out, err);
        return cmd_axioms(measure, suite, trials, axiom_seed, output, out);
    } catch (const ParameterError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << '\n';
        return kExitIngestion;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace fairrisk::cli
