#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lemda/dataset.hpp"

namespace lemda {

struct ClassCounts {
    std::uint64_t normal = 0;
    std::uint64_t attack = 0;

    std::uint64_t total() const noexcept { return normal + attack; }
    bool operator==(const ClassCounts&) const = default;
};

// Gini impurity for two classes, in [0, 0.5].
double gini(const ClassCounts& c);

// G(parent) - P_left * G(left) - P_right * G(right).
double impurity_decrease(const ClassCounts& parent, const ClassCounts& left,
                         const ClassCounts& right);

struct SplitCandidate {
    std::size_t feature = 0;
    bool categorical = false;
    // Numeric: rows with value <= threshold go left.
    // Categorical: rows whose code equals threshold go left (one-vs-rest).
    double threshold = 0;
    ClassCounts left;
    ClassCounts right;
    double p_left = 0;
    double p_right = 0;
    double decrease = 0;
};

// Column-major model input: the feature columns of a Dataset plus labels.
class FeatureMatrix {
public:
    explicit FeatureMatrix(const Dataset& d);
    // Columns looked up by name; throws ArgumentError when one is missing.
    FeatureMatrix(const Dataset& d, std::span<const std::string> names);

    std::size_t rows() const noexcept { return labels_.size(); }
    std::size_t features() const noexcept { return columns_.size(); }
    const std::vector<double>& column(std::size_t f) const { return columns_[f]; }
    double value(std::size_t row, std::size_t f) const { return columns_[f][row]; }
    bool categorical(std::size_t f) const { return categorical_[f] != 0; }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::vector<std::uint8_t>& labels() const noexcept { return labels_; }

private:
    std::vector<std::vector<double>> columns_;
    std::vector<std::uint8_t> categorical_;
    std::vector<std::string> names_;
    std::vector<std::uint8_t> labels_;
};

// Exhaustive CART search over `features` restricted to `rows` (duplicates
// count as repeated samples). Ties go to the lowest feature index, then the
// lowest threshold. Returns nothing for a pure node or when no feature has
// two distinct values.
std::optional<SplitCandidate> best_split(const FeatureMatrix& x, std::span<const std::size_t> rows,
                                         std::span<const std::size_t> features);
std::optional<SplitCandidate> best_split(const Dataset& d, std::span<const std::size_t> rows,
                                         std::span<const std::size_t> features);

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    bool categorical = false;
    double threshold = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint8_t leaf_class = kNormal;
    ClassCounts counts;
    double decrease = 0;  // impurity decrease of this node's split
    double weight = 0;    // node samples / root samples

    bool is_leaf() const noexcept { return feature < 0; }
};

struct TreeConfig {
    std::size_t max_depth = 0;  // 0 = unlimited
    std::size_t min_samples_split = 2;
    std::size_t max_features = 0;  // 0 = all features at every split
};

class TreeModel {
public:
    TreeModel() = default;
    TreeModel(std::vector<TreeNode> nodes, std::vector<std::size_t> oob_rows,
              std::size_t feature_count);

    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    const std::vector<std::size_t>& oob_rows() const noexcept { return oob_rows_; }
    std::size_t feature_count() const noexcept { return feature_count_; }
    std::size_t depth() const;
    bool uses_feature(std::size_t f) const;

    // value_at(f) returns the row's value for feature f.
    template <class ValueAt>
    std::uint8_t predict(ValueAt&& value_at) const {
        std::size_t i = 0;
        while (!nodes_[i].is_leaf()) {
            const auto& n = nodes_[i];
            const double v = value_at(static_cast<std::size_t>(n.feature));
            const bool go_left = n.categorical ? v == n.threshold : v <= n.threshold;
            i = static_cast<std::size_t>(go_left ? n.left : n.right);
        }
        return nodes_[i].leaf_class;
    }

    std::uint8_t predict_row(const FeatureMatrix& x, std::size_t row) const {
        return predict([&](std::size_t f) { return x.value(row, f); });
    }

    bool operator==(const TreeModel&) const;

private:
    std::vector<TreeNode> nodes_;
    std::vector<std::size_t> oob_rows_;
    std::size_t feature_count_ = 0;
};

bool operator==(const TreeNode& a, const TreeNode& b);

// Greedy growth until pure, min_samples_split, or max_depth. `seed` drives
// per-split feature subsampling when cfg.max_features is set.
TreeModel train_tree(const FeatureMatrix& x, std::span<const std::size_t> rows,
                     const TreeConfig& cfg, std::uint64_t seed = 0);
TreeModel train_tree(const Dataset& d, std::span<const std::size_t> rows, const TreeConfig& cfg,
                     std::uint64_t seed = 0);

struct ForestConfig {
    std::size_t trees = 100;
    bool bootstrap = true;
    std::size_t max_features = 0;  // 0 = ceil(sqrt(features))
    std::size_t max_depth = 0;
    std::size_t min_samples_split = 2;
    std::size_t jobs = 1;
};

struct ForestModel {
    std::vector<TreeModel> trees;
    std::vector<std::string> feature_names;
    std::vector<std::uint8_t> categorical;
    std::uint64_t seed = 0;
    std::size_t max_features = 0;
    bool bootstrap = true;

    std::size_t feature_count() const noexcept { return feature_names.size(); }
    // Majority vote; ties go to attack.
    std::vector<std::uint8_t> predict(const FeatureMatrix& x) const;
    // Columns matched by name; missing columns raise ArgumentError.
    std::vector<std::uint8_t> predict(const Dataset& d) const;
    FeatureMatrix inputs(const Dataset& d) const;
};

// Each tree draws its bootstrap and feature subsamples from a stream seeded
// by (seed, tree index), so results do not depend on cfg.jobs.
ForestModel train_forest(const Dataset& d, const ForestConfig& cfg, std::uint64_t seed);
ForestModel train_forest(const FeatureMatrix& x, const ForestConfig& cfg, std::uint64_t seed);

// A single unbagged tree wrapped as a one-tree forest (the DT model).
ForestModel train_decision_tree(const Dataset& d, const TreeConfig& cfg = {},
                                std::uint64_t seed = 0);

void save_forest(std::ostream& out, const ForestModel& m);
ForestModel load_forest(std::istream& in);

}  // namespace lemda
