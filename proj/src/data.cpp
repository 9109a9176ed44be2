#include "fairrisk/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "fairrisk/errors.hpp"
#include "fairrisk/numeric.hpp"

namespace fairrisk {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    if (*begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
    return v;
}

[[noreturn]] void fail_at(std::size_t row, const std::string& column, const std::string& what) {
    std::ostringstream msg;
    msg << "row " << row << ", column '" << column << "': " << what;
    throw InputError(msg.str());
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;       // inside a quoted section
    bool was_quoted = false;   // current field used quotes
    bool any_content = false;  // current record has seen a character

    auto end_field = [&] {
        record.push_back(was_quoted ? field : trim(field));
        field.clear();
        was_quoted = false;
    };
    auto end_record = [&] {
        if (any_content) {
            end_field();
            records.push_back(std::move(record));
        }
        record.clear();
        field.clear();
        was_quoted = false;
        any_content = false;
    };

    char c = 0;
    while (in.get(c)) {
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                quoted = true;
                was_quoted = true;
                any_content = true;
                field.clear();
                break;
            case ',':
                any_content = true;
                end_field();
                break;
            case '\r':
                break;
            case '\n':
                end_record();
                break;
            default:
                any_content = true;
                field.push_back(c);
        }
    }
    if (quoted) throw InputError("unterminated quoted field at end of file");
    end_record();
    return records;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return load_csv(in, schema);
}

Dataset load_csv(std::istream& in, const CsvSchema& schema) {
    const auto records = parse_csv(in);
    if (records.empty()) throw InputError("CSV input is empty");
    if (records.size() < 2) throw InputError("CSV input has a header but no data rows");
    const auto& header = records.front();

    std::map<std::string, std::size_t> column;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (!column.emplace(header[c], c).second) throw InputError("duplicate column name '" + header[c] + "'");
    }
    auto index_of = [&](const std::string& name) {
        const auto it = column.find(name);
        if (it == column.end()) throw InputError("column '" + name + "' not found in header");
        return it->second;
    };

    if (schema.sensitive_columns.empty()) throw InputError("schema names no sensitive column");
    const std::size_t label_col = index_of(schema.label_column);
    std::vector<std::size_t> sens_cols;
    for (const auto& name : schema.sensitive_columns) {
        if (name == schema.label_column) throw InputError("label and sensitive columns must differ");
        sens_cols.push_back(index_of(name));
    }
    if (schema.sensitive_kind == SensitiveKind::Real && sens_cols.size() != 1) {
        throw InputError("a real-valued sensitive feature must be a single column");
    }

    std::vector<std::size_t> feature_cols;
    if (schema.feature_columns.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c) {
            const bool is_sensitive = std::find(sens_cols.begin(), sens_cols.end(), c) != sens_cols.end();
            if (c != label_col && (schema.sensitive_as_feature || !is_sensitive)) feature_cols.push_back(c);
        }
    } else {
        for (const auto& name : schema.feature_columns) {
            const std::size_t c = index_of(name);
            if (c == label_col) throw InputError("label column cannot be a feature");
            feature_cols.push_back(c);
        }
        if (schema.sensitive_as_feature) {
            for (std::size_t c : sens_cols) {
                if (std::find(feature_cols.begin(), feature_cols.end(), c) == feature_cols.end()) {
                    feature_cols.push_back(c);
                }
            }
        }
    }
    if (feature_cols.empty()) throw InputError("no feature columns selected");

    const std::size_t m = records.size() - 1;
    for (std::size_t r = 1; r <= m; ++r) {
        if (records[r].size() != header.size()) {
            std::ostringstream msg;
            msg << "row " << r << " has " << records[r].size() << " fields, header has " << header.size();
            throw InputError(msg.str());
        }
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (records[r][c].empty()) fail_at(r, header[c], "missing value");
        }
    }

    Dataset data;
    data.labels.reserve(m);
    for (std::size_t r = 1; r <= m; ++r) {
        data.labels.push_back(records[r][label_col] == schema.positive_label_token ? 1 : -1);
    }

    if (schema.sensitive_kind == SensitiveKind::Real) {
        RealSensitive s;
        for (std::size_t r = 1; r <= m; ++r) {
            const auto v = parse_number(records[r][sens_cols[0]]);
            if (!v) fail_at(r, header[sens_cols[0]], "unparseable number '" + records[r][sens_cols[0]] + "'");
            s.values.push_back(*v);
        }
        data.sensitive = std::move(s);
    } else {
        CategoricalSensitive s;
        std::unordered_map<std::string, int> codes;
        for (std::size_t r = 1; r <= m; ++r) {
            std::string key;
            for (std::size_t i = 0; i < sens_cols.size(); ++i) {
                if (i) key += '|';
                key += records[r][sens_cols[i]];
            }
            auto [it, inserted] = codes.emplace(key, static_cast<int>(s.names.size()));
            if (inserted) s.names.push_back(key);
            s.codes.push_back(it->second);
        }
        data.sensitive = std::move(s);
    }

    // Column encodings: numeric copies through, otherwise one-hot.
    struct Encoding {
        std::size_t source;
        bool numeric;
        std::vector<std::string> categories;
    };
    std::vector<Encoding> encodings;
    std::size_t width = 0;
    for (std::size_t c : feature_cols) {
        Encoding e{c, parse_number(records[1][c]).has_value(), {}};
        if (!e.numeric) {
            std::set<std::string> seen;
            for (std::size_t r = 1; r <= m; ++r) {
                if (seen.insert(records[r][c]).second) e.categories.push_back(records[r][c]);
            }
            width += e.categories.size();
            for (const auto& cat : e.categories) data.feature_names.push_back(header[c] + "=" + cat);
        } else {
            width += 1;
            data.feature_names.push_back(header[c]);
        }
        encodings.push_back(std::move(e));
    }

    data.features = Matrix(m, width);
    for (std::size_t r = 1; r <= m; ++r) {
        std::size_t out = 0;
        for (const auto& e : encodings) {
            const std::string& cell = records[r][e.source];
            if (e.numeric) {
                const auto v = parse_number(cell);
                if (!v) fail_at(r, header[e.source], "unparseable number '" + cell + "'");
                data.features(r - 1, out++) = *v;
            } else {
                const auto pos = std::find(e.categories.begin(), e.categories.end(), cell) - e.categories.begin();
                data.features(r - 1, out + static_cast<std::size_t>(pos)) = 1.0;
                out += e.categories.size();
            }
        }
    }
    data.validate();
    return data;
}

void write_feature_csv(std::ostream& out, const Dataset& data) {
    for (std::size_t c = 0; c < data.dims(); ++c) {
        if (c) out << ',';
        out << (c < data.feature_names.size() ? data.feature_names[c] : "x" + std::to_string(c));
    }
    out << '\n';
    const auto old_precision = out.precision(17);
    for (std::size_t r = 0; r < data.size(); ++r) {
        const auto row = data.features.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ',';
            out << row[c];
        }
        out << '\n';
    }
    out.precision(old_precision);
}

void SynthSpec::validate() const {
    if (m < 1) throw ParameterError("synthetic sample count must be >= 1");
    for (double f : group_fractions) {
        if (!(f > 0.0 && f < 1.0)) throw ParameterError("group fractions must lie in (0,1)");
    }
    if (std::abs(group_fractions[0] + group_fractions[1] - 1.0) > 1e-12) {
        throw ParameterError("group fractions must sum to 1");
    }
    for (double eta : noise_rates) {
        if (!(eta >= 0.0 && eta < 0.5)) throw ParameterError("noise rates must lie in [0, 0.5)");
    }
}

Dataset generate_synth(const SynthSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::bernoulli_distribution in_group1(spec.group_fractions[1]);
    std::bernoulli_distribution positive(0.5);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    Dataset data;
    data.features = Matrix(spec.m, 2);
    data.feature_names = {"x1", "x2"};
    CategoricalSensitive sens;
    sens.names = {"0", "1"};
    for (std::size_t j = 0; j < spec.m; ++j) {
        const int group = in_group1(rng) ? 1 : 0;
        const int label = positive(rng) ? 1 : -1;
        const auto& mean = spec.class_means[group][label == 1 ? 1 : 0];
        data.features(j, 0) = mean[0] + noise(rng);
        data.features(j, 1) = mean[1] + noise(rng);
        const bool flip = u(rng) < spec.noise_rates[group];
        data.labels.push_back(flip ? -label : label);
        sens.codes.push_back(group);
    }
    data.sensitive = std::move(sens);
    return data;
}

SplitResult split(const Dataset& data, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ParameterError("train fraction must lie in (0,1)");
    }
    data.validate();
    const std::size_t m = data.size();
    if (m < 2) throw InputError("need at least two rows to split");
    std::mt19937_64 rng(seed);

    SplitResult result;
    std::map<std::pair<int, int>, std::vector<std::size_t>> strata;
    if (const auto* cat = std::get_if<CategoricalSensitive>(&data.sensitive)) {
        std::map<int, std::size_t> group_size;
        for (int c : cat->codes) ++group_size[c];
        const bool enough = std::all_of(group_size.begin(), group_size.end(),
                                        [](const auto& kv) { return kv.second >= 2; });
        if (enough) {
            for (std::size_t j = 0; j < m; ++j) strata[{data.labels[j], cat->codes[j]}].push_back(j);
        }
        result.stratified = enough;
    } else {
        result.stratified = false;
    }
    if (!result.stratified) {
        std::vector<std::size_t> all(m);
        std::iota(all.begin(), all.end(), 0);
        strata[{0, 0}] = std::move(all);
    }

    auto target = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(m)));
    target = std::clamp<std::size_t>(target, 1, m - 1);

    // Largest-remainder allocation of the train quota across strata.
    std::vector<std::vector<std::size_t>*> buckets;
    std::vector<std::size_t> quota;
    std::vector<double> remainder;
    std::size_t assigned = 0;
    for (auto& [key, idx] : strata) {
        std::shuffle(idx.begin(), idx.end(), rng);
        const double exact = train_fraction * static_cast<double>(idx.size());
        const auto q = static_cast<std::size_t>(std::floor(exact));
        buckets.push_back(&idx);
        quota.push_back(q);
        remainder.push_back(exact - static_cast<double>(q));
        assigned += q;
    }
    std::vector<std::size_t> order(buckets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; assigned < target && i < order.size(); ++i) {
        if (quota[order[i]] < buckets[order[i]]->size()) {
            ++quota[order[i]];
            ++assigned;
        }
    }

    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;
    for (std::size_t b = 0; b < buckets.size(); ++b) {
        const auto& idx = *buckets[b];
        train_idx.insert(train_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(quota[b]));
        test_idx.insert(test_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(quota[b]), idx.end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    result.train = data.subset(train_idx);
    result.test = data.subset(test_idx);
    return result;
}

Scaler Scaler::fit(const Dataset& data) {
    const std::size_t d = data.dims();
    const double m = static_cast<double>(data.size());
    Scaler s;
    s.means.assign(d, 0.0);
    s.stds.assign(d, 0.0);
    for (std::size_t c = 0; c < d; ++c) {
        detail::CompensatedSum sum;
        for (std::size_t r = 0; r < data.size(); ++r) sum.add(data.features(r, c));
        const double mean = sum.value() / m;
        detail::CompensatedSum sq;
        for (std::size_t r = 0; r < data.size(); ++r) {
            const double dev = data.features(r, c) - mean;
            sq.add(dev * dev);
        }
        const double sd = std::sqrt(sq.value() / m);
        s.means[c] = mean;
        s.stds[c] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 0.0;
    }
    return s;
}

Dataset Scaler::apply(const Dataset& data) const {
    if (data.dims() != means.size()) throw ParameterError("scaler dimension does not match the dataset");
    Dataset out = data;
    for (std::size_t r = 0; r < out.size(); ++r) {
        auto row = out.features.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (stds[c] > 0.0) row[c] = (row[c] - means[c]) / stds[c];
        }
    }
    return out;
}

StandardizeResult standardize(const Dataset& train, const Dataset& test) {
    Scaler scaler = Scaler::fit(train);
    return {scaler.apply(train), scaler.apply(test), std::move(scaler)};
}

}  // namespace fairrisk
