#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "lemda/dataset.hpp"
#include "lemda/forest.hpp"
#include "lemda/importance.hpp"
#include "lemda/mlp.hpp"

namespace lemda {

// Attack is the positive class.
struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const noexcept { return tp + tn + fp + fn; }
    bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const std::uint8_t> predicted,
                          std::span<const std::uint8_t> truth);

double accuracy(const ConfusionMatrix& c);
// tp / (tp + (fp + fn) / 2); 0 when the denominator is 0 (see f1_degenerate).
double f1_score(const ConfusionMatrix& c);
bool f1_degenerate(const ConfusionMatrix& c);

struct SafetyWeights {
    double tn = 1.0 / 19.0;
    double tp = 2.0 / 19.0;
    double fp = 8.0 / 19.0;
    double fn = 8.0 / 19.0;
};

double safety_score(const ConfusionMatrix& c, const SafetyWeights& w = {});

enum class Method { base, pca, mda, lemda };
enum class ModelKind { dt, rf, mlp };

std::string_view to_string(Method m);
std::string_view to_string(ModelKind m);
Method parse_method(std::string_view text);
ModelKind parse_model(std::string_view text);

enum class SelectionScope { per_fold, global };

struct ExperimentConfig {
    std::string dataset_id = "dataset";
    std::size_t k = 10;
    std::uint64_t seed = 7;
    std::size_t k_features = 5;
    double b = 0.5;
    bool sf = false;
    bool sf_peak_at_one = false;
    double pca_threshold = 0.95;
    std::size_t mda_repeats = 3;
    double validation_fraction = 0.2;
    SelectionScope selection_scope = SelectionScope::per_fold;
    ForestConfig forest{};
    TreeConfig tree{};
    MlpHyper mlp{};
    SafetyWeights safety{};
    std::size_t jobs = 1;
    // Called with every dataset handed to a fit routine (feature method or
    // model); lets tests audit that no test-fold row is ever fitted on.
    std::function<void(std::size_t fold, const Dataset& fit_input)> on_fit;
};

struct FoldResult {
    std::size_t fold = 0;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    ConfusionMatrix cm;
    double accuracy = 0;
    double f1 = 0;
    bool f1_degenerate = false;
    double safety = 0;
    double train_s = 0;
    double detect_s = 0;
    std::vector<std::string> features;
    std::optional<ImportanceReport> importance;
    std::size_t pca_components = 0;
};

struct Aggregate {
    double tp = 0, tn = 0, fp = 0, fn = 0;
    double accuracy = 0;
    double f1 = 0;
    double safety = 0;
    double train_s = 0;
    double detect_s = 0;
};

// Arithmetic mean over folds, accumulated in fold order.
Aggregate aggregate(std::span<const FoldResult> folds);

struct ExperimentReport {
    std::string dataset_id;
    Method method = Method::base;
    ModelKind model = ModelKind::dt;
    std::vector<FoldResult> folds;
    Aggregate mean;
};

// Folds built the way the benchmark builds them: contiguous blocks when SF
// is on, stratified shuffles otherwise.
FoldPlan plan_folds(const Dataset& d, const ExperimentConfig& cfg);

// Identifier columns dropped and categories encoded; what Base feeds models.
Dataset prepare_base(const Dataset& d);

ExperimentReport run_experiment(const Dataset& d, Method method, ModelKind model,
                                const FoldPlan& plan, const ExperimentConfig& cfg);

struct BenchReport {
    ExperimentConfig config;
    std::vector<Method> methods;
    std::vector<ModelKind> models;
    bool contiguous_folds = false;
    std::vector<ExperimentReport> experiments;
    std::vector<std::string> notes;
};

// Runs the full method x model matrix over one fold plan. Each feature
// method is fitted once per fold and shared by all models.
BenchReport run_bench(const Dataset& d, const std::vector<Method>& methods,
                      const std::vector<ModelKind>& models, const ExperimentConfig& cfg);

nlohmann::json config_to_json(const ExperimentConfig& cfg);
nlohmann::json to_json(const BenchReport& r);
// Plain-text results table (model, method, mean confusion counts, metrics,
// timings), rendered from a JSON report so saved reports can be re-rendered.
std::string render_table(const nlohmann::json& report);

// Rounds to 6 decimal places, as emitted in reports.
double round6(double v);

}  // namespace lemda
