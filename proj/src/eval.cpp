#include "lemda/eval.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "lemda/error.hpp"
#include "lemda/lemda.hpp"
#include "lemda/parallel.hpp"
#include "lemda/pca.hpp"
#include "lemda/rng.hpp"

namespace lemda {

ConfusionMatrix confusion(std::span<const std::uint8_t> predicted,
                          std::span<const std::uint8_t> truth) {
    if (predicted.size() != truth.size()) {
        throw ArgumentError("prediction and truth lengths differ (" +
                            std::to_string(predicted.size()) + " vs " +
                            std::to_string(truth.size()) + ")");
    }
    if (predicted.empty()) throw ArgumentError("confusion matrix needs at least one row");
    ConfusionMatrix c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool p = predicted[i] == kAttack;
        const bool t = truth[i] == kAttack;
        if (p && t) ++c.tp;
        else if (!p && !t) ++c.tn;
        else if (p) ++c.fp;
        else ++c.fn;
    }
    return c;
}

double accuracy(const ConfusionMatrix& c) {
    if (c.total() == 0) throw ArgumentError("accuracy of an empty confusion matrix");
    return static_cast<double>(c.tn + c.tp) / static_cast<double>(c.total());
}

bool f1_degenerate(const ConfusionMatrix& c) { return c.tp + c.fp + c.fn == 0; }

double f1_score(const ConfusionMatrix& c) {
    if (f1_degenerate(c)) return 0.0;
    const double tp = static_cast<double>(c.tp);
    return tp / (tp + 0.5 * static_cast<double>(c.fp + c.fn));
}

double safety_score(const ConfusionMatrix& c, const SafetyWeights& w) {
    const double good = w.tn * static_cast<double>(c.tn) + w.tp * static_cast<double>(c.tp);
    const double bad = w.fp * static_cast<double>(c.fp) + w.fn * static_cast<double>(c.fn);
    const double denom = good + bad;
    if (!(denom > 0)) throw ArgumentError("safety score has a zero weighted denominator");
    return good / denom;
}

std::string_view to_string(Method m) {
    switch (m) {
        case Method::base: return "Base";
        case Method::pca: return "PCA";
        case Method::mda: return "MDA";
        case Method::lemda: return "LEMDA";
    }
    return "Base";
}

std::string_view to_string(ModelKind m) {
    switch (m) {
        case ModelKind::dt: return "DT";
        case ModelKind::rf: return "RF";
        case ModelKind::mlp: return "MLP";
    }
    return "DT";
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

Method parse_method(std::string_view text) {
    const auto t = lower(text);
    if (t == "base") return Method::base;
    if (t == "pca") return Method::pca;
    if (t == "mda") return Method::mda;
    if (t == "lemda") return Method::lemda;
    throw ArgumentError("unknown method '" + std::string(text) + "'");
}

ModelKind parse_model(std::string_view text) {
    const auto t = lower(text);
    if (t == "dt") return ModelKind::dt;
    if (t == "rf") return ModelKind::rf;
    if (t == "mlp") return ModelKind::mlp;
    throw ArgumentError("unknown model '" + std::string(text) + "'");
}

Aggregate aggregate(std::span<const FoldResult> folds) {
    Aggregate a;
    if (folds.empty()) return a;
    for (const auto& f : folds) {
        a.tp += static_cast<double>(f.cm.tp);
        a.tn += static_cast<double>(f.cm.tn);
        a.fp += static_cast<double>(f.cm.fp);
        a.fn += static_cast<double>(f.cm.fn);
        a.accuracy += f.accuracy;
        a.f1 += f.f1;
        a.safety += f.safety;
        a.train_s += f.train_s;
        a.detect_s += f.detect_s;
    }
    const double n = static_cast<double>(folds.size());
    for (double* v : {&a.tp, &a.tn, &a.fp, &a.fn, &a.accuracy, &a.f1, &a.safety, &a.train_s,
                      &a.detect_s}) {
        *v /= n;
    }
    return a;
}

FoldPlan plan_folds(const Dataset& d, const ExperimentConfig& cfg) {
    return cfg.sf ? split_blocks(d, cfg.k) : split_folds(d, cfg.k, cfg.seed);
}

Dataset prepare_base(const Dataset& d) { return encode_categories(drop_identifiers(d)); }

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold) {
    auto rng = derive_rng(seed, {0xf01d, fold});
    return rng();
}

Dataset keep_columns(const Dataset& d, const std::vector<std::string>& names) {
    std::vector<Column> cols;
    for (const auto& n : names) cols.push_back(d.column(n));
    return d.with_columns(std::move(cols));
}

struct Transformed {
    Dataset train;
    Dataset test;
    std::vector<std::string> features;
    std::optional<ImportanceReport> importance;
    std::size_t pca_components = 0;
};

SelectionConfig selection_config(const ExperimentConfig& cfg, std::uint64_t seed,
                                 std::size_t jobs) {
    SelectionConfig s;
    s.k = cfg.k_features;
    s.mda_repeats = cfg.mda_repeats;
    s.validation_fraction = cfg.validation_fraction;
    s.forest = cfg.forest;
    s.seed = seed;
    s.jobs = jobs;
    return s;
}

FoldResult fit_and_score(const Transformed& t, ModelKind model, const ExperimentConfig& cfg,
                         std::uint64_t seed, std::size_t jobs, std::size_t fold) {
    if (cfg.on_fit) cfg.on_fit(fold, t.train);
    FoldResult r;
    r.fold = fold;
    r.train_rows = t.train.rows();
    r.test_rows = t.test.rows();
    r.features = t.features;
    r.importance = t.importance;
    r.pca_components = t.pca_components;
    std::vector<std::uint8_t> predicted;
    switch (model) {
        case ModelKind::dt: {
            const auto start = Clock::now();
            const auto m = train_decision_tree(t.train, cfg.tree, seed);
            r.train_s = seconds_since(start);
            const auto detect = Clock::now();
            predicted = m.predict(t.test);
            r.detect_s = seconds_since(detect);
            break;
        }
        case ModelKind::rf: {
            ForestConfig fc = cfg.forest;
            fc.jobs = jobs;
            const auto start = Clock::now();
            const auto m = train_forest(t.train, fc, seed);
            r.train_s = seconds_since(start);
            const auto detect = Clock::now();
            predicted = m.predict(t.test);
            r.detect_s = seconds_since(detect);
            break;
        }
        case ModelKind::mlp: {
            MlpHyper h = cfg.mlp;
            h.seed = seed;
            const auto start = Clock::now();
            const auto m = train_mlp(t.train, h);
            r.train_s = seconds_since(start);
            const auto detect = Clock::now();
            predicted = predict_mlp(m, t.test);
            r.detect_s = seconds_since(detect);
            break;
        }
    }
    r.cm = confusion(predicted, t.test.labels());
    r.accuracy = accuracy(r.cm);
    r.f1 = f1_score(r.cm);
    r.f1_degenerate = f1_degenerate(r.cm);
    r.safety = safety_score(r.cm, cfg.safety);
    return r;
}

// results[method][model] holds one FoldResult per fold.
using Matrix = std::vector<std::vector<std::vector<FoldResult>>>;

Matrix run_matrix(const Dataset& prepared, const FoldPlan& plan,
                  const std::vector<Method>& methods, const std::vector<ModelKind>& models,
                  const ExperimentConfig& cfg) {
    if (plan.assignments.size() != prepared.rows()) {
        throw ArgumentError("fold plan was built for a different row count");
    }
    const std::size_t k = plan.k;
    const bool parallel_folds = cfg.jobs > 1 && k > 1;
    const std::size_t inner_jobs = parallel_folds ? 1 : std::max<std::size_t>(1, cfg.jobs);

    std::optional<FeatureSelection> global_selection;
    const bool needs_selection = std::any_of(methods.begin(), methods.end(), [](Method m) {
        return m == Method::mda || m == Method::lemda;
    });
    if (needs_selection && cfg.selection_scope == SelectionScope::global) {
        global_selection =
            select_features_mda(prepared, selection_config(cfg, cfg.seed, inner_jobs));
    }

    Matrix results(methods.size(),
                   std::vector<std::vector<FoldResult>>(models.size(), std::vector<FoldResult>(k)));
    parallel_for(k, parallel_folds ? cfg.jobs : 1, [&](std::size_t fold) {
        try {
            const auto seed = fold_seed(cfg.seed, fold);
            const Dataset train = prepared.select_rows(plan.train_rows(fold));
            const Dataset test = prepared.select_rows(plan.test_rows(fold));
            std::optional<FeatureSelection> selection = global_selection;
            for (std::size_t mi = 0; mi < methods.size(); ++mi) {
                Transformed t{train, test, {}, std::nullopt, 0};
                switch (methods[mi]) {
                    case Method::base:
                        t.features = train.feature_names();
                        break;
                    case Method::pca: {
                        if (cfg.on_fit) cfg.on_fit(fold, train);
                        const auto pca = fit_pca(train, cfg.pca_threshold);
                        t.train = transform_pca(pca, train);
                        t.test = transform_pca(pca, test);
                        t.features = t.train.feature_names();
                        t.pca_components = pca.n_components;
                        break;
                    }
                    case Method::mda:
                    case Method::lemda: {
                        if (!selection) {
                            if (cfg.on_fit) cfg.on_fit(fold, train);
                            selection = select_features_mda(
                                train, selection_config(cfg, seed, inner_jobs));
                        }
                        t.importance = selection->importance;
                        if (methods[mi] == Method::mda) {
                            t.train = keep_columns(train, selection->selected);
                            t.test = keep_columns(test, selection->selected);
                        } else {
                            if (cfg.on_fit) cfg.on_fit(fold, train);
                            PipelineConfig pc;
                            pc.b = cfg.b;
                            pc.sf_enabled = cfg.sf;
                            pc.sf_peak_at_one = cfg.sf_peak_at_one;
                            const auto pipeline = fit_pipeline(train, *selection, pc);
                            t.train = transform_pipeline(pipeline, train);
                            t.test = transform_pipeline(pipeline, test);
                        }
                        t.features = t.train.feature_names();
                        break;
                    }
                }
                for (std::size_t mo = 0; mo < models.size(); ++mo) {
                    results[mi][mo][fold] =
                        fit_and_score(t, models[mo], cfg, seed ^ 0x9e3779b97f4a7c15ULL,
                                      inner_jobs, fold);
                }
            }
        } catch (const Error& e) {
            throw TrainingError("fold " + std::to_string(fold) + ": " + e.what());
        }
    });
    return results;
}

}  // namespace

ExperimentReport run_experiment(const Dataset& d, Method method, ModelKind model,
                                const FoldPlan& plan, const ExperimentConfig& cfg) {
    auto results = run_matrix(prepare_base(d), plan, {method}, {model}, cfg);
    ExperimentReport r{cfg.dataset_id, method, model, std::move(results[0][0]), {}};
    r.mean = aggregate(r.folds);
    return r;
}

BenchReport run_bench(const Dataset& d, const std::vector<Method>& methods,
                      const std::vector<ModelKind>& models, const ExperimentConfig& cfg) {
    if (methods.empty() || models.empty()) {
        throw ArgumentError("bench needs at least one method and one model");
    }
    const Dataset prepared = prepare_base(d);
    const FoldPlan plan = plan_folds(prepared, cfg);
    BenchReport report;
    report.config = cfg;
    report.methods = methods;
    report.models = models;
    report.contiguous_folds = plan.contiguous;
    if (plan.contiguous) {
        report.notes.push_back("SF enabled: folds are contiguous row blocks (temporal order kept)");
    } else {
        report.notes.push_back("folds are stratified by label and shuffled under the seed");
    }
    if (cfg.selection_scope == SelectionScope::global) {
        report.notes.push_back(
            "MDA selection fitted once on all rows (global scope; test rows leak into selection)");
    }
    auto results = run_matrix(prepared, plan, methods, models, cfg);
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        for (std::size_t mo = 0; mo < models.size(); ++mo) {
            ExperimentReport r{cfg.dataset_id, methods[mi], models[mo],
                               std::move(results[mi][mo]), {}};
            r.mean = aggregate(r.folds);
            report.experiments.push_back(std::move(r));
        }
    }
    return report;
}

double round6(double v) { return std::round(v * 1e6) / 1e6; }

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    using nlohmann::json;
    return json{
        {"dataset", cfg.dataset_id},
        {"k", cfg.k},
        {"seed", cfg.seed},
        {"k_features", cfg.k_features},
        {"b", cfg.b},
        {"sf", cfg.sf},
        {"sf_peak_at_one", cfg.sf_peak_at_one},
        {"pca_threshold", cfg.pca_threshold},
        {"mda_repeats", cfg.mda_repeats},
        {"validation_fraction", cfg.validation_fraction},
        {"selection_scope", cfg.selection_scope == SelectionScope::global ? "global" : "per_fold"},
        {"forest",
         {{"trees", cfg.forest.trees},
          {"bootstrap", cfg.forest.bootstrap},
          {"max_features", cfg.forest.max_features == 0 ? json("sqrt")
                                                        : json(cfg.forest.max_features)},
          {"max_depth", cfg.forest.max_depth},
          {"min_samples_split", cfg.forest.min_samples_split}}},
        {"tree",
         {{"max_depth", cfg.tree.max_depth},
          {"min_samples_split", cfg.tree.min_samples_split},
          {"max_features", cfg.tree.max_features}}},
        {"mlp",
         {{"epochs", cfg.mlp.epochs},
          {"batch", cfg.mlp.batch},
          {"lr", cfg.mlp.lr},
          {"hidden", cfg.mlp.hidden},
          {"activations", "tanh,sigmoid"}}},
        {"safety_weights",
         {{"tn", cfg.safety.tn}, {"tp", cfg.safety.tp}, {"fp", cfg.safety.fp},
          {"fn", cfg.safety.fn}}},
        {"standardize_before_pca", true},
        {"jobs", cfg.jobs},
    };
}

nlohmann::json to_json(const BenchReport& r) {
    using nlohmann::json;
    json config = config_to_json(r.config);
    json methods = json::array();
    for (auto m : r.methods) methods.push_back(to_string(m));
    json models = json::array();
    for (auto m : r.models) models.push_back(to_string(m));
    config["methods"] = methods;
    config["models"] = models;
    config["fold_mode"] = r.contiguous_folds ? "contiguous" : "stratified";

    json folds = json::array();
    json agg = json::object();
    for (const auto& e : r.experiments) {
        for (const auto& f : e.folds) {
            json jf{{"method", to_string(e.method)},
                    {"model", to_string(e.model)},
                    {"fold", f.fold},
                    {"tp", f.cm.tp},
                    {"tn", f.cm.tn},
                    {"fp", f.cm.fp},
                    {"fn", f.cm.fn},
                    {"accuracy", round6(f.accuracy)},
                    {"f1", round6(f.f1)},
                    {"safety", round6(f.safety)},
                    {"train_s", round6(f.train_s)},
                    {"detect_s", round6(f.detect_s)},
                    {"features", f.features}};
            if (f.f1_degenerate) jf["f1_degenerate"] = true;
            if (e.method == Method::pca) jf["pca_components"] = f.pca_components;
            if (f.importance) jf["importance"] = to_json(*f.importance);
            folds.push_back(std::move(jf));
        }
        const auto& a = e.mean;
        agg[std::string(to_string(e.method)) + "/" + std::string(to_string(e.model))] = {
            {"method", to_string(e.method)},
            {"model", to_string(e.model)},
            {"folds", e.folds.size()},
            {"tp", round6(a.tp)},
            {"tn", round6(a.tn)},
            {"fp", round6(a.fp)},
            {"fn", round6(a.fn)},
            {"accuracy", round6(a.accuracy)},
            {"f1", round6(a.f1)},
            {"safety", round6(a.safety)},
            {"train_s", round6(a.train_s)},
            {"detect_s", round6(a.detect_s)}};
    }
    return json{{"config", config}, {"folds", folds}, {"aggregate", agg}, {"notes", r.notes}};
}

std::string render_table(const nlohmann::json& report) {
    const auto& cfg = report.at("config");
    const auto& agg = report.at("aggregate");
    std::ostringstream out;
    out << "Dataset: " << cfg.value("dataset", std::string("?")) << "  (k=" << cfg.value("k", 0)
        << ", " << cfg.value("fold_mode", std::string("?")) << " folds, seed "
        << cfg.value("seed", std::uint64_t{0}) << ", b=" << cfg.value("b", 0.0) << ")\n";
    char line[256];
    std::snprintf(line, sizeof line, "%-5s %-6s %10s %10s %10s %10s %10s %10s %10s %12s %12s\n",
                  "Model", "Method", "TP", "FN", "FP", "TN", "Accuracy", "F1", "Safety",
                  "Train (s)", "Detect (s)");
    out << line;
    out << std::string(std::string_view(line).size() - 1, '-') << '\n';
    for (const auto& model : cfg.at("models")) {
        for (const auto& method : cfg.at("methods")) {
            const auto key = method.get<std::string>() + "/" + model.get<std::string>();
            if (!agg.contains(key)) continue;
            const auto& a = agg.at(key);
            std::snprintf(line, sizeof line,
                          "%-5s %-6s %10.1f %10.1f %10.1f %10.1f %9.3f%% %9.3f%% %9.3f%% %12.6f "
                          "%12.6f\n",
                          model.get<std::string>().c_str(), method.get<std::string>().c_str(),
                          a.at("tp").get<double>(), a.at("fn").get<double>(),
                          a.at("fp").get<double>(), a.at("tn").get<double>(),
                          100.0 * a.at("accuracy").get<double>(), 100.0 * a.at("f1").get<double>(),
                          100.0 * a.at("safety").get<double>(), a.at("train_s").get<double>(),
                          a.at("detect_s").get<double>());
            out << line;
        }
    }
    out << "Counts are per-fold means; metrics and times are means over folds.\n";
    return out.str();
}

}  // namespace lemda
