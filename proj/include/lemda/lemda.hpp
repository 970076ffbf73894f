#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lemda/dataset.hpp"
#include "lemda/forest.hpp"
#include "lemda/importance.hpp"

namespace lemda {

// ---------------------------------------------------------------------------
// WEDF: maps each distinct value u of the most informative feature f_m to
// b^p * w_u, where w_u is u's attack fraction in training and p its rank.
// ---------------------------------------------------------------------------

enum class WedfKeyKind {
    categorical,     // keyed by the original category text
    numeric_exact,   // numeric f_m with at most kMaxExactWedfKeys distinct values
    numeric_binned,  // numeric f_m quantized into equal-frequency bins
};

inline constexpr std::size_t kMaxExactWedfKeys = 256;

struct WedfEntry {
    std::string key;   // category text (categorical keys only)
    double value = 0;  // numeric value, or bin index when binned
    std::size_t n = 0;  // rows with this value
    std::size_t z = 0;  // attack rows with this value
    double w = 0;       // z / n, or 0 when z == 0
    std::size_t p = 0;  // 1-based rank
    double score = 0;   // b^p * w
};

class WedfDictionary {
public:
    WedfDictionary() = default;
    WedfDictionary(std::string feature, WedfKeyKind kind, double b, std::vector<WedfEntry> entries,
                   std::vector<double> bin_edges = {});

    const std::string& feature() const noexcept { return feature_; }
    WedfKeyKind key_kind() const noexcept { return kind_; }
    double b() const noexcept { return b_; }
    // In rank order: attack-bearing values first.
    const std::vector<WedfEntry>& entries() const noexcept { return entries_; }
    const std::vector<double>& bin_edges() const noexcept { return bin_edges_; }

    // Score for a value; values never seen at fit time score 0.
    double score(std::string_view category) const;
    double score(double numeric) const;
    const WedfEntry* find(std::string_view category) const;

    // f_mn for every row of `column`.
    std::vector<double> scores_for(const Column& column) const;

private:
    std::size_t bin_of(double v) const;

    std::string feature_;
    WedfKeyKind kind_ = WedfKeyKind::categorical;
    double b_ = 0.5;
    std::vector<WedfEntry> entries_;
    std::vector<double> bin_edges_;
};

// Ranks attack-bearing values by descending count (ties: higher attack
// fraction, then first appearance), assigns p = 1, 2, ..., then appends the
// zero-attack values, whose score is 0 whatever their rank.
WedfDictionary build_wedf_dictionary(const Dataset& train, const std::string& feature, double b);

// Replaces `w.feature()` with a numeric column `<feature>_wedf` in place.
Dataset apply_wedf(const Dataset& d, const WedfDictionary& w);

// ---------------------------------------------------------------------------
// SF: b^d where d counts rows since the last suspicious (non-common) value.
// ---------------------------------------------------------------------------

struct SfConfig {
    double b = 0.5;
    std::string common_value;
    std::string feature;
    // Suspicious rows emit b^1 by default; with peak_at_one they emit b^0 = 1
    // and decay from there.
    bool peak_at_one = false;
};

std::vector<double> compute_sf_series(const Dataset& d, const SfConfig& cfg);
// Same scan over plain category text.
std::vector<double> compute_sf_series(const std::vector<std::string>& values, const SfConfig& cfg);

// Modal value of `feature` over normal rows (ties: first appearance).
std::string most_common_normal_value(const Dataset& train, const std::string& feature);

// True when the column holds category text (raw or encoded).
bool is_categorical_feature(const Column& c);

// ---------------------------------------------------------------------------
// Pipeline: MDA top-k -> f_m replaced by f_mn -> optional f_smn.
// ---------------------------------------------------------------------------

struct SelectionConfig {
    std::size_t k = 5;
    std::size_t mda_repeats = 3;
    double validation_fraction = 0.2;
    ForestConfig forest{};
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
};

struct FeatureSelection {
    std::vector<std::string> selected;  // first entry is f_m
    ImportanceReport importance;
};

// Trains an importance forest on an inner split of `train` (the rest is the
// MDA validation set) and keeps the top-k features.
FeatureSelection select_features_mda(const Dataset& train, const SelectionConfig& cfg);

struct PipelineConfig {
    SelectionConfig selection{};
    double b = 0.5;
    bool sf_enabled = false;
    bool sf_peak_at_one = false;
};

struct LemdaPipeline {
    std::vector<std::string> selected;
    WedfDictionary wedf;
    std::optional<SfConfig> sf;
    double b = 0.5;
    ImportanceReport importance;
    // How raw CSV input should be read before transform (set by the CLI).
    std::vector<ColumnSchema> input_schema;
    LabelMapping labels;

    const std::string& most_informative() const { return selected.front(); }
    std::vector<std::string> output_features() const;
};

LemdaPipeline fit_pipeline(const Dataset& train, const PipelineConfig& cfg);
// Fits WEDF/SF on `train` for an already chosen feature list.
LemdaPipeline fit_pipeline(const Dataset& train, const FeatureSelection& selection,
                           const PipelineConfig& cfg);

Dataset transform_pipeline(const LemdaPipeline& p, const Dataset& d);

void save_pipeline(std::ostream& out, const LemdaPipeline& p);
LemdaPipeline load_pipeline(std::istream& in);

}  // namespace lemda
