#include "lemda/importance.hpp"

#include <algorithm>
#include <numeric>

#include "lemda/error.hpp"
#include "lemda/parallel.hpp"
#include "lemda/rng.hpp"

namespace lemda {

std::vector<std::size_t> rank_by_score(const std::vector<double>& scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

ImportanceReport mdi_scores(const ForestModel& m) {
    const std::size_t n_features = m.feature_count();
    std::vector<double> scores(n_features, 0.0);
    for (const auto& tree : m.trees) {
        std::vector<double> per_tree(n_features, 0.0);
        for (const auto& node : tree.nodes()) {
            if (node.is_leaf()) continue;
            per_tree[static_cast<std::size_t>(node.feature)] += node.weight * node.decrease;
        }
        for (std::size_t f = 0; f < n_features; ++f) scores[f] += per_tree[f];
    }
    if (!m.trees.empty()) {
        for (auto& s : scores) s /= static_cast<double>(m.trees.size());
    }
    const double total = std::accumulate(scores.begin(), scores.end(), 0.0);
    if (total > 0) {
        for (auto& s : scores) s /= total;
    }
    ImportanceReport r;
    r.method = ImportanceMethod::mdi;
    r.feature_names = m.feature_names;
    r.ordering = rank_by_score(scores);
    r.scores = std::move(scores);
    return r;
}

std::vector<std::size_t> mda_permutation(std::uint64_t seed, std::size_t feature, std::size_t tree,
                                         std::size_t repeat, std::size_t rows) {
    auto rng = derive_rng(seed, {feature, tree, repeat});
    std::vector<std::size_t> perm(rows);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    return perm;
}

ImportanceReport mda_scores(const ForestModel& m, const Dataset& validation, std::size_t repeats,
                            std::uint64_t seed, std::size_t jobs) {
    if (validation.rows() == 0) throw ArgumentError("MDA needs a non-empty validation set");
    if (repeats == 0) throw ArgumentError("MDA repeats must be at least 1");
    if (m.trees.empty()) throw ArgumentError("MDA needs a trained forest");
    const FeatureMatrix x = m.inputs(validation);
    const std::size_t n = x.rows();
    const std::size_t n_features = x.features();
    const std::size_t n_trees = m.trees.size();
    const auto& y = x.labels();

    // delta[t * F + f] = sa - sb for tree t and feature f.
    std::vector<double> delta(n_trees * n_features, 0.0);
    parallel_for(n_trees, jobs, [&](std::size_t t) {
        const auto& tree = m.trees[t];
        std::size_t wrong_before = 0;
        for (std::size_t r = 0; r < n; ++r) wrong_before += tree.predict_row(x, r) != y[r];
        const double before = static_cast<double>(wrong_before) / static_cast<double>(n);
        for (std::size_t f = 0; f < n_features; ++f) {
            // A feature the tree never tests cannot change its predictions.
            if (!tree.uses_feature(f)) continue;
            const auto& col = x.column(f);
            double after = 0;
            for (std::size_t rep = 0; rep < repeats; ++rep) {
                const auto perm = mda_permutation(seed, f, t, rep, n);
                std::size_t wrong = 0;
                for (std::size_t r = 0; r < n; ++r) {
                    const double swapped = col[perm[r]];
                    const auto pred = tree.predict([&](std::size_t g) {
                        return g == f ? swapped : x.value(r, g);
                    });
                    wrong += pred != y[r];
                }
                after += static_cast<double>(wrong) / static_cast<double>(n);
            }
            after /= static_cast<double>(repeats);
            delta[t * n_features + f] = after - before;
        }
    });

    std::vector<double> scores(n_features, 0.0);
    for (std::size_t t = 0; t < n_trees; ++t) {
        for (std::size_t f = 0; f < n_features; ++f) scores[f] += delta[t * n_features + f];
    }
    for (auto& s : scores) s /= static_cast<double>(n_trees);

    ImportanceReport r;
    r.method = ImportanceMethod::mda;
    r.feature_names = m.feature_names;
    r.ordering = rank_by_score(scores);
    r.scores = std::move(scores);
    r.repeats = repeats;
    r.validation_source = "caller-supplied validation set";
    return r;
}

std::vector<std::size_t> select_top_k(const ImportanceReport& r, std::size_t k) {
    if (k < 1 || k > r.ordering.size()) {
        throw ArgumentError("k=" + std::to_string(k) + " outside [1, " +
                            std::to_string(r.ordering.size()) + "]");
    }
    return {r.ordering.begin(), r.ordering.begin() + static_cast<std::ptrdiff_t>(k)};
}

std::string_view to_string(ImportanceMethod m) {
    return m == ImportanceMethod::mdi ? "MDI" : "MDA";
}

nlohmann::json to_json(const ImportanceReport& r) {
    nlohmann::json j;
    j["method"] = to_string(r.method);
    auto& scores = j["scores"] = nlohmann::json::array();
    for (std::size_t f = 0; f < r.scores.size(); ++f) {
        scores.push_back({{"name", r.feature_names.at(f)}, {"score", r.scores[f]}});
    }
    auto& ordering = j["ordering"] = nlohmann::json::array();
    for (auto f : r.ordering) ordering.push_back(r.feature_names.at(f));
    if (r.method == ImportanceMethod::mda) {
        j["repeats"] = r.repeats;
        j["validation_source"] = r.validation_source;
    }
    return j;
}

}  // namespace lemda
