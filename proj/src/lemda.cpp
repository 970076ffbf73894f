#include "lemda/lemda.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "json.hpp"
#include "lemda/error.hpp"
#include "lemda/rng.hpp"

namespace lemda {

namespace {

struct ValueStats {
    std::size_t n = 0;
    std::size_t z = 0;
    std::size_t first = 0;
};

void check_decay(double b) {
    if (!(b > 0.0 && b < 1.0)) {
        throw ArgumentError("decay factor b must lie in (0, 1), got " + std::to_string(b));
    }
}

}  // namespace

bool is_categorical_feature(const Column& c) {
    return c.kind() == ColumnKind::categorical || c.has_code_table();
}

WedfDictionary::WedfDictionary(std::string feature, WedfKeyKind kind, double b,
                               std::vector<WedfEntry> entries, std::vector<double> bin_edges)
    : feature_(std::move(feature)),
      kind_(kind),
      b_(b),
      entries_(std::move(entries)),
      bin_edges_(std::move(bin_edges)) {
    check_decay(b_);
}

const WedfEntry* WedfDictionary::find(std::string_view category) const {
    for (const auto& e : entries_) {
        if (e.key == category) return &e;
    }
    return nullptr;
}

double WedfDictionary::score(std::string_view category) const {
    if (kind_ != WedfKeyKind::categorical) throw ArgumentError("dictionary is keyed by numbers");
    const auto* e = find(category);
    return e ? e->score : 0.0;
}

std::size_t WedfDictionary::bin_of(double v) const {
    return static_cast<std::size_t>(std::lower_bound(bin_edges_.begin(), bin_edges_.end(), v) -
                                    bin_edges_.begin());
}

double WedfDictionary::score(double numeric) const {
    if (kind_ == WedfKeyKind::categorical) throw ArgumentError("dictionary is keyed by text");
    const double key = kind_ == WedfKeyKind::numeric_binned
                           ? static_cast<double>(bin_of(numeric))
                           : numeric;
    for (const auto& e : entries_) {
        if (e.value == key) return e.score;
    }
    return 0.0;
}

std::vector<double> WedfDictionary::scores_for(const Column& column) const {
    std::vector<double> out(column.values.size(), 0.0);
    if (kind_ == WedfKeyKind::categorical) {
        if (!column.has_code_table()) {
            throw ArgumentError("column '" + column.name() +
                                "' has no category text for a categorical dictionary");
        }
        std::vector<double> by_code(column.categories.size());
        for (std::size_t c = 0; c < by_code.size(); ++c) by_code[c] = score(column.categories[c]);
        for (std::size_t r = 0; r < out.size(); ++r) {
            out[r] = by_code[static_cast<std::size_t>(column.values[r])];
        }
        return out;
    }
    std::unordered_map<double, double> lookup;
    for (const auto& e : entries_) lookup.emplace(e.value, e.score);
    for (std::size_t r = 0; r < out.size(); ++r) {
        const double v = column.values[r];
        const double key =
            kind_ == WedfKeyKind::numeric_binned ? static_cast<double>(bin_of(v)) : v;
        auto it = lookup.find(key);
        out[r] = it == lookup.end() ? 0.0 : it->second;
    }
    return out;
}

WedfDictionary build_wedf_dictionary(const Dataset& train, const std::string& feature, double b) {
    check_decay(b);
    const auto index = train.find_column(feature);
    if (!index) throw ArgumentError("training data lacks f_m column '" + feature + "'");
    const Column& col = train.column(*index);
    const auto& y = train.labels();

    std::vector<WedfEntry> entries;
    std::vector<std::size_t> first_seen;
    WedfKeyKind kind = WedfKeyKind::categorical;
    std::vector<double> edges;

    auto collect = [&](auto key_of, auto make_entry) {
        std::map<double, ValueStats> stats;
        for (std::size_t r = 0; r < col.values.size(); ++r) {
            auto [it, inserted] = stats.try_emplace(key_of(col.values[r]));
            if (inserted) it->second.first = r;
            ++it->second.n;
            if (y[r] == kAttack) ++it->second.z;
        }
        for (const auto& [key, s] : stats) {
            WedfEntry e = make_entry(key);
            e.n = s.n;
            e.z = s.z;
            e.w = s.z >= 1 ? static_cast<double>(s.z) / static_cast<double>(s.n) : 0.0;
            entries.push_back(std::move(e));
            first_seen.push_back(s.first);
        }
    };

    if (is_categorical_feature(col)) {
        collect([](double code) { return code; },
                [&](double code) {
                    WedfEntry e;
                    e.key = col.categories.at(static_cast<std::size_t>(code));
                    return e;
                });
    } else {
        std::vector<double> sorted = col.values;
        std::sort(sorted.begin(), sorted.end());
        const auto distinct = static_cast<std::size_t>(
            std::unique(sorted.begin(), sorted.end()) - sorted.begin());
        if (distinct <= kMaxExactWedfKeys) {
            kind = WedfKeyKind::numeric_exact;
            collect([](double v) { return v; },
                    [](double v) {
                        WedfEntry e;
                        e.value = v;
                        return e;
                    });
        } else {
            kind = WedfKeyKind::numeric_binned;
            sorted = col.values;
            std::sort(sorted.begin(), sorted.end());
            const std::size_t n = sorted.size();
            for (std::size_t i = 1; i < kMaxExactWedfKeys; ++i) {
                const std::size_t upper = (i * n + kMaxExactWedfKeys - 1) / kMaxExactWedfKeys;
                const double edge = sorted[std::max<std::size_t>(upper, 1) - 1];
                if (edges.empty() || edge > edges.back()) edges.push_back(edge);
            }
            collect(
                [&](double v) {
                    return static_cast<double>(
                        std::lower_bound(edges.begin(), edges.end(), v) - edges.begin());
                },
                [](double bin) {
                    WedfEntry e;
                    e.value = bin;
                    e.key = "bin:" + std::to_string(static_cast<std::size_t>(bin));
                    return e;
                });
        }
    }

    std::vector<std::size_t> order(entries.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
        const auto& ea = entries[a];
        const auto& ec = entries[c];
        const bool attack_a = ea.z >= 1;
        const bool attack_c = ec.z >= 1;
        if (attack_a != attack_c) return attack_a;
        if (ea.n != ec.n) return ea.n > ec.n;
        if (ea.w != ec.w) return ea.w > ec.w;
        return first_seen[a] < first_seen[c];
    });
    std::vector<WedfEntry> ranked;
    ranked.reserve(entries.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        WedfEntry e = std::move(entries[order[i]]);
        e.p = i + 1;
        e.score = e.z >= 1 ? std::pow(b, static_cast<double>(e.p)) * e.w : 0.0;
        ranked.push_back(std::move(e));
    }
    return WedfDictionary(feature, kind, b, std::move(ranked), std::move(edges));
}

Dataset apply_wedf(const Dataset& d, const WedfDictionary& w) {
    const auto index = d.find_column(w.feature());
    if (!index) throw ArgumentError("dataset lacks f_m column '" + w.feature() + "'");
    std::vector<Column> cols = d.columns();
    cols[*index] = make_numeric(w.feature() + "_wedf", w.scores_for(d.column(*index)));
    return d.with_columns(std::move(cols));
}

std::vector<double> compute_sf_series(const std::vector<std::string>& values, const SfConfig& cfg) {
    std::vector<double> out;
    out.reserve(values.size());
    double base = 0.0;
    double d = 1.0;
    for (const auto& v : values) {
        if (v != cfg.common_value) {
            base = cfg.b;
            d = cfg.peak_at_one ? 0.0 : 1.0;
        }
        out.push_back(base == 0.0 ? 0.0 : std::pow(base, d));
        d += 1.0;
    }
    return out;
}

std::vector<double> compute_sf_series(const Dataset& d, const SfConfig& cfg) {
    const auto index = d.find_column(cfg.feature);
    if (!index) throw ArgumentError("dataset lacks SF source column '" + cfg.feature + "'");
    const Column& col = d.column(*index);
    if (!is_categorical_feature(col)) {
        throw ConfigError("SF needs a categorical source column, '" + cfg.feature + "' is numeric");
    }
    std::vector<std::string> text;
    text.reserve(d.rows());
    for (std::size_t r = 0; r < d.rows(); ++r) text.push_back(col.text(r));
    return compute_sf_series(text, cfg);
}

std::string most_common_normal_value(const Dataset& train, const std::string& feature) {
    const Column& col = train.column(feature);
    if (!is_categorical_feature(col)) {
        throw ConfigError("'" + feature + "' is numeric; SF needs a categorical f_m");
    }
    std::vector<ValueStats> stats(col.categories.size());
    std::vector<bool> seen(col.categories.size(), false);
    for (std::size_t r = 0; r < train.rows(); ++r) {
        if (train.labels()[r] != kNormal) continue;
        const auto code = static_cast<std::size_t>(col.values[r]);
        if (!seen[code]) {
            seen[code] = true;
            stats[code].first = r;
        }
        ++stats[code].n;
    }
    std::optional<std::size_t> best;
    for (std::size_t c = 0; c < stats.size(); ++c) {
        if (!seen[c]) continue;
        if (!best || stats[c].n > stats[*best].n ||
            (stats[c].n == stats[*best].n && stats[c].first < stats[*best].first)) {
            best = c;
        }
    }
    if (!best) throw ConfigError("no normal rows to derive the SF common value from");
    return col.categories[*best];
}

FeatureSelection select_features_mda(const Dataset& train, const SelectionConfig& cfg) {
    if (!(cfg.validation_fraction > 0 && cfg.validation_fraction < 1)) {
        throw ArgumentError("validation fraction must lie in (0, 1)");
    }
    std::vector<std::size_t> attacks;
    std::vector<std::size_t> normals;
    for (std::size_t r = 0; r < train.rows(); ++r) {
        (train.labels()[r] == kAttack ? attacks : normals).push_back(r);
    }
    if (attacks.empty() || normals.empty()) {
        throw TrainingError("feature selection needs both classes in the training rows");
    }
    auto rng = derive_rng(cfg.seed, {0x5e1ec7});
    std::vector<std::size_t> fit_rows;
    std::vector<std::size_t> validation_rows;
    for (auto* group : {&attacks, &normals}) {
        std::shuffle(group->begin(), group->end(), rng);
        auto held = static_cast<std::size_t>(
            std::llround(cfg.validation_fraction * static_cast<double>(group->size())));
        if (group->size() >= 2) held = std::clamp<std::size_t>(held, 1, group->size() - 1);
        else held = 0;
        validation_rows.insert(validation_rows.end(), group->begin(),
                               group->begin() + static_cast<std::ptrdiff_t>(held));
        fit_rows.insert(fit_rows.end(), group->begin() + static_cast<std::ptrdiff_t>(held),
                        group->end());
    }
    if (validation_rows.empty()) throw ArgumentError("too few rows for an MDA validation split");
    std::sort(fit_rows.begin(), fit_rows.end());
    std::sort(validation_rows.begin(), validation_rows.end());

    ForestConfig forest_cfg = cfg.forest;
    forest_cfg.jobs = cfg.jobs;
    const auto forest = train_forest(train.select_rows(fit_rows), forest_cfg, cfg.seed);
    FeatureSelection out;
    out.importance =
        mda_scores(forest, train.select_rows(validation_rows), cfg.mda_repeats, cfg.seed, cfg.jobs);
    out.importance.validation_source =
        "inner stratified split of the training rows (" +
        std::to_string(validation_rows.size()) + " validation / " +
        std::to_string(fit_rows.size()) + " fit)";
    for (auto f : select_top_k(out.importance, cfg.k)) {
        out.selected.push_back(out.importance.feature_names[f]);
    }
    return out;
}

std::vector<std::string> LemdaPipeline::output_features() const {
    std::vector<std::string> out;
    for (const auto& name : selected) {
        out.push_back(name == wedf.feature() ? name + "_wedf" : name);
    }
    if (sf) out.push_back(sf->feature + "_sf");
    return out;
}

LemdaPipeline fit_pipeline(const Dataset& train, const FeatureSelection& selection,
                           const PipelineConfig& cfg) {
    if (selection.selected.empty()) throw ArgumentError("pipeline needs at least one feature");
    LemdaPipeline p;
    p.selected = selection.selected;
    p.importance = selection.importance;
    p.b = cfg.b;
    const std::string& fm = p.selected.front();
    p.wedf = build_wedf_dictionary(train, fm, cfg.b);
    if (cfg.sf_enabled) {
        if (!is_categorical_feature(train.column(fm))) {
            throw ConfigError("SF requested but the most informative feature '" + fm +
                              "' is numeric");
        }
        p.sf = SfConfig{cfg.b, most_common_normal_value(train, fm), fm, cfg.sf_peak_at_one};
    }
    return p;
}

LemdaPipeline fit_pipeline(const Dataset& train, const PipelineConfig& cfg) {
    if (train.attack_count() == 0 || train.attack_count() == train.rows()) {
        throw TrainingError("pipeline fitting needs both classes");
    }
    return fit_pipeline(train, select_features_mda(train, cfg.selection), cfg);
}

Dataset transform_pipeline(const LemdaPipeline& p, const Dataset& d) {
    std::vector<Column> cols;
    for (const auto& name : p.selected) {
        const auto index = d.find_column(name);
        if (!index) throw ArgumentError("dataset lacks selected feature '" + name + "'");
        if (name == p.wedf.feature()) {
            cols.push_back(make_numeric(name + "_wedf", p.wedf.scores_for(d.column(*index))));
        } else {
            cols.push_back(d.column(*index));
        }
    }
    if (p.sf) cols.push_back(make_numeric(p.sf->feature + "_sf", compute_sf_series(d, *p.sf)));
    return d.with_columns(std::move(cols));
}

namespace {

constexpr int kPipelineFormatVersion = 1;

std::string_view to_string(WedfKeyKind k) {
    switch (k) {
        case WedfKeyKind::categorical: return "categorical";
        case WedfKeyKind::numeric_exact: return "numeric_exact";
        case WedfKeyKind::numeric_binned: return "numeric_binned";
    }
    return "categorical";
}

WedfKeyKind parse_key_kind(const std::string& s) {
    if (s == "categorical") return WedfKeyKind::categorical;
    if (s == "numeric_exact") return WedfKeyKind::numeric_exact;
    if (s == "numeric_binned") return WedfKeyKind::numeric_binned;
    throw ParseError("unknown WEDF key kind '" + s + "'", 0, "");
}

}  // namespace

void save_pipeline(std::ostream& out, const LemdaPipeline& p) {
    using nlohmann::json;
    json j;
    j["format"] = "lemda-pipeline";
    j["version"] = kPipelineFormatVersion;
    j["selected"] = p.selected;
    j["b"] = p.b;
    json entries = json::array();
    for (const auto& e : p.wedf.entries()) {
        entries.push_back({{"key", e.key},
                           {"value", e.value},
                           {"n", e.n},
                           {"z", e.z},
                           {"w", e.w},
                           {"p", e.p},
                           {"score", e.score}});
    }
    j["wedf"] = {{"feature", p.wedf.feature()},
                 {"key_kind", to_string(p.wedf.key_kind())},
                 {"b", p.wedf.b()},
                 {"bin_edges", p.wedf.bin_edges()},
                 {"entries", entries}};
    if (p.sf) {
        j["sf"] = {{"b", p.sf->b},
                   {"common_value", p.sf->common_value},
                   {"feature", p.sf->feature},
                   {"peak_at_one", p.sf->peak_at_one}};
    } else {
        j["sf"] = nullptr;
    }
    if (!p.importance.scores.empty()) j["importance"] = to_json(p.importance);
    json schema = json::array();
    for (const auto& c : p.input_schema) {
        schema.push_back({{"name", c.name}, {"kind", lemda::to_string(c.kind)}});
    }
    j["input_schema"] = schema;
    j["labels"] = {{"normal", p.labels.normal}, {"attack", p.labels.attack}};
    out << j.dump(2) << '\n';
}

LemdaPipeline load_pipeline(std::istream& in) {
    using nlohmann::json;
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed pipeline file: ") + e.what(), 0, "");
    }
    if (j.value("format", "") != "lemda-pipeline") {
        throw ParseError("not a pipeline file", 0, "");
    }
    if (j.value("version", 0) != kPipelineFormatVersion) {
        throw ParseError("unsupported pipeline format version", 0, "");
    }
    try {
        LemdaPipeline p;
        p.selected = j.at("selected").get<std::vector<std::string>>();
        p.b = j.at("b").get<double>();
        const auto& w = j.at("wedf");
        std::vector<WedfEntry> entries;
        for (const auto& e : w.at("entries")) {
            entries.push_back({e.at("key").get<std::string>(), e.at("value").get<double>(),
                               e.at("n").get<std::size_t>(), e.at("z").get<std::size_t>(),
                               e.at("w").get<double>(), e.at("p").get<std::size_t>(),
                               e.at("score").get<double>()});
        }
        p.wedf = WedfDictionary(w.at("feature").get<std::string>(),
                                parse_key_kind(w.at("key_kind").get<std::string>()),
                                w.at("b").get<double>(), std::move(entries),
                                w.at("bin_edges").get<std::vector<double>>());
        if (!j.at("sf").is_null()) {
            const auto& s = j.at("sf");
            p.sf = SfConfig{s.at("b").get<double>(), s.at("common_value").get<std::string>(),
                            s.at("feature").get<std::string>(), s.at("peak_at_one").get<bool>()};
        }
        if (j.contains("importance")) {
            const auto& imp = j.at("importance");
            p.importance.method =
                imp.at("method") == "MDI" ? ImportanceMethod::mdi : ImportanceMethod::mda;
            for (const auto& s : imp.at("scores")) {
                p.importance.feature_names.push_back(s.at("name").get<std::string>());
                p.importance.scores.push_back(s.at("score").get<double>());
            }
            for (const auto& name : imp.at("ordering")) {
                const auto it = std::find(p.importance.feature_names.begin(),
                                          p.importance.feature_names.end(), name.get<std::string>());
                p.importance.ordering.push_back(
                    static_cast<std::size_t>(it - p.importance.feature_names.begin()));
            }
            p.importance.repeats = imp.value("repeats", std::size_t{0});
            p.importance.validation_source = imp.value("validation_source", "");
        }
        for (const auto& c : j.at("input_schema")) {
            p.input_schema.push_back(
                {c.at("name").get<std::string>(), parse_column_kind(c.at("kind").get<std::string>())});
        }
        p.labels = {j.at("labels").at("normal").get<std::string>(),
                    j.at("labels").at("attack").get<std::string>()};
        if (p.selected.empty() || p.selected.front() != p.wedf.feature()) {
            throw ParseError("pipeline f_m does not match its dictionary", 0, "");
        }
        return p;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed pipeline file: ") + e.what(), 0, "");
    }
}

}  // namespace lemda
