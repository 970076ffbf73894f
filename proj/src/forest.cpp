#include "lemda/forest.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "json.hpp"

#include "lemda/error.hpp"
#include "lemda/parallel.hpp"
#include "lemda/rng.hpp"

namespace lemda {

double gini(const ClassCounts& c) {
    const auto total = c.total();
    if (total == 0) throw ArgumentError("gini of an empty node");
    const double pn = static_cast<double>(c.normal) / static_cast<double>(total);
    const double pa = static_cast<double>(c.attack) / static_cast<double>(total);
    return pn * (1.0 - pn) + pa * (1.0 - pa);
}

double impurity_decrease(const ClassCounts& parent, const ClassCounts& left,
                         const ClassCounts& right) {
    if (left.normal + right.normal != parent.normal || left.attack + right.attack != parent.attack) {
        throw ArgumentError("child counts do not add up to the parent");
    }
    const double total = static_cast<double>(parent.total());
    double children = 0;
    if (left.total() > 0) children += static_cast<double>(left.total()) / total * gini(left);
    if (right.total() > 0) children += static_cast<double>(right.total()) / total * gini(right);
    return gini(parent) - children;
}

FeatureMatrix::FeatureMatrix(const Dataset& d) : labels_(d.labels()) {
    for (auto i : d.feature_columns()) {
        const auto& c = d.column(i);
        columns_.push_back(c.values);
        categorical_.push_back(c.kind() == ColumnKind::categorical ? 1 : 0);
        names_.push_back(c.name());
    }
}

FeatureMatrix::FeatureMatrix(const Dataset& d, std::span<const std::string> names)
    : labels_(d.labels()) {
    for (const auto& name : names) {
        auto i = d.find_column(name);
        if (!i) throw ArgumentError("dataset lacks model feature '" + name + "'");
        const auto& c = d.column(*i);
        if (c.kind() != ColumnKind::numeric && c.kind() != ColumnKind::categorical) {
            throw ArgumentError("column '" + name + "' is not a feature column");
        }
        columns_.push_back(c.values);
        categorical_.push_back(c.kind() == ColumnKind::categorical ? 1 : 0);
        names_.push_back(name);
    }
}

namespace {

// Decreases closer than this count as ties (rounding noise between
// mathematically equal candidates).
constexpr double kTieTolerance = 1e-12;

ClassCounts count_labels(std::span<const std::uint32_t> rows, const std::vector<std::uint8_t>& y) {
    ClassCounts c;
    for (auto r : rows) (y[r] == kAttack ? c.attack : c.normal) += 1;
    return c;
}

std::uint8_t majority(const ClassCounts& c) {
    return c.attack >= c.normal ? kAttack : kNormal;
}

// Presorted CART state. For every feature, `sorted[f]` lists the sample rows
// (bootstrap duplicates repeated) ordered by that feature's value; each tree
// node owns the same [begin, end) range in every list.
class Splitter {
public:
    Splitter(const FeatureMatrix& x, const std::vector<std::vector<std::uint32_t>>& order,
             std::span<const std::uint32_t> multiplicity)
        : x_(x), sorted_(x.features()), go_left_(x.rows(), 0) {
        std::size_t n = 0;
        for (auto m : multiplicity) n += m;
        for (std::size_t f = 0; f < x.features(); ++f) {
            auto& s = sorted_[f];
            s.reserve(n);
            for (auto r : order[f]) s.insert(s.end(), multiplicity[r], r);
        }
        size_ = n;
        buffer_.resize(n);
    }

    std::size_t size() const noexcept { return size_; }

    ClassCounts counts(std::size_t begin, std::size_t end) const {
        if (sorted_.empty()) return {};
        const auto& s = sorted_[0];
        return count_labels(std::span(s).subspan(begin, end - begin), x_.labels());
    }

    std::optional<SplitCandidate> best(std::size_t begin, std::size_t end,
                                       std::span<const std::size_t> features,
                                       const ClassCounts& parent) const {
        std::optional<SplitCandidate> best;
        if (parent.normal == 0 || parent.attack == 0) return best;
        const auto& y = x_.labels();
        auto consider = [&](std::size_t f, bool categorical, double threshold,
                            const ClassCounts& left) {
            const ClassCounts right{parent.normal - left.normal, parent.attack - left.attack};
            const double decrease = impurity_decrease(parent, left, right);
            if (best && !(decrease > best->decrease + kTieTolerance)) return;
            const double total = static_cast<double>(parent.total());
            best = SplitCandidate{f,
                                  categorical,
                                  threshold,
                                  left,
                                  right,
                                  static_cast<double>(left.total()) / total,
                                  static_cast<double>(right.total()) / total,
                                  decrease};
        };
        for (auto f : features) {
            const auto& s = sorted_[f];
            const auto& col = x_.column(f);
            if (x_.categorical(f)) {
                // One group per code; each code-vs-rest is a candidate.
                std::size_t i = begin;
                while (i < end) {
                    const double code = col[s[i]];
                    ClassCounts left;
                    std::size_t j = i;
                    for (; j < end && col[s[j]] == code; ++j) {
                        (y[s[j]] == kAttack ? left.attack : left.normal) += 1;
                    }
                    if (left.total() < parent.total()) consider(f, true, code, left);
                    i = j;
                }
            } else {
                ClassCounts left;
                for (std::size_t i = begin; i + 1 < end; ++i) {
                    (y[s[i]] == kAttack ? left.attack : left.normal) += 1;
                    const double a = col[s[i]];
                    const double b = col[s[i + 1]];
                    if (a == b) continue;
                    double mid = a + (b - a) / 2.0;
                    if (mid >= b || mid < a) mid = a;
                    consider(f, false, mid, left);
                }
            }
        }
        return best;
    }

    // Partitions every feature list so the node's left child occupies
    // [begin, begin + n_left) and the right child the rest.
    std::size_t apply(std::size_t begin, std::size_t end, const SplitCandidate& split) {
        const auto& col = x_.column(split.feature);
        const auto& key = sorted_[split.feature];
        for (std::size_t i = begin; i < end; ++i) {
            const double v = col[key[i]];
            go_left_[key[i]] = split.categorical ? (v == split.threshold) : (v <= split.threshold);
        }
        std::size_t n_left = 0;
        for (auto& s : sorted_) {
            std::size_t l = begin;
            std::size_t r = 0;
            for (std::size_t i = begin; i < end; ++i) {
                if (go_left_[s[i]]) {
                    s[l++] = s[i];
                } else {
                    buffer_[r++] = s[i];
                }
            }
            std::copy_n(buffer_.begin(), r, s.begin() + static_cast<std::ptrdiff_t>(l));
            n_left = l - begin;
        }
        return n_left;
    }

private:
    const FeatureMatrix& x_;
    std::vector<std::vector<std::uint32_t>> sorted_;
    std::vector<std::uint8_t> go_left_;
    std::vector<std::uint32_t> buffer_;
    std::size_t size_ = 0;
};

std::vector<std::vector<std::uint32_t>> sort_orders(const FeatureMatrix& x) {
    std::vector<std::vector<std::uint32_t>> order(x.features());
    for (std::size_t f = 0; f < x.features(); ++f) {
        auto& o = order[f];
        o.resize(x.rows());
        std::iota(o.begin(), o.end(), 0u);
        const auto& col = x.column(f);
        std::stable_sort(o.begin(), o.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
    }
    return order;
}

std::vector<std::uint32_t> multiplicity_of(std::span<const std::size_t> rows, std::size_t n) {
    std::vector<std::uint32_t> m(n, 0);
    for (auto r : rows) {
        if (r >= n) throw ArgumentError("row index out of range");
        ++m[r];
    }
    return m;
}

TreeModel grow(const FeatureMatrix& x, const std::vector<std::vector<std::uint32_t>>& order,
               std::span<const std::uint32_t> multiplicity, const TreeConfig& cfg, Rng& rng,
               std::vector<std::size_t> oob) {
    if (x.features() == 0) throw TrainingError("no feature columns to train on");
    Splitter splitter(x, order, multiplicity);
    const std::size_t n = splitter.size();
    if (n == 0) throw ArgumentError("cannot grow a tree on an empty row set");
    const std::size_t n_features = x.features();
    const std::size_t subsample =
        cfg.max_features == 0 ? n_features : std::min(cfg.max_features, n_features);

    std::vector<TreeNode> nodes;
    struct Pending {
        std::size_t node, begin, end, depth;
    };
    std::vector<Pending> stack;
    nodes.push_back({});
    stack.push_back({0, 0, n, 0});

    std::vector<std::size_t> pool(n_features);
    std::vector<std::size_t> chosen;
    std::vector<std::size_t> rest;
    while (!stack.empty()) {
        const Pending p = stack.back();
        stack.pop_back();
        const ClassCounts counts = splitter.counts(p.begin, p.end);
        {
            auto& node = nodes[p.node];
            node.counts = counts;
            node.leaf_class = majority(counts);
            node.weight = static_cast<double>(counts.total()) / static_cast<double>(n);
        }
        const bool can_split = counts.total() >= std::max<std::size_t>(2, cfg.min_samples_split) &&
                               (cfg.max_depth == 0 || p.depth < cfg.max_depth) &&
                               counts.normal > 0 && counts.attack > 0;
        if (!can_split) continue;

        std::iota(pool.begin(), pool.end(), std::size_t{0});
        if (subsample < n_features) {
            for (std::size_t i = 0; i < subsample; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, n_features - 1);
                std::swap(pool[i], pool[pick(rng)]);
            }
        }
        chosen.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(subsample));
        std::sort(chosen.begin(), chosen.end());
        auto split = splitter.best(p.begin, p.end, chosen, counts);
        if (!split && subsample < n_features) {
            // Every sampled feature was constant here; fall back to the others.
            rest.assign(pool.begin() + static_cast<std::ptrdiff_t>(subsample), pool.end());
            std::sort(rest.begin(), rest.end());
            split = splitter.best(p.begin, p.end, rest, counts);
        }
        if (!split) continue;

        const std::size_t n_left = splitter.apply(p.begin, p.end, *split);
        const auto left = nodes.size();
        nodes.push_back({});
        nodes.push_back({});
        auto& node = nodes[p.node];
        node.feature = static_cast<std::int32_t>(split->feature);
        node.categorical = split->categorical;
        node.threshold = split->threshold;
        node.decrease = std::max(0.0, split->decrease);
        node.left = static_cast<std::int32_t>(left);
        node.right = static_cast<std::int32_t>(left + 1);
        stack.push_back({left + 1, p.begin + n_left, p.end, p.depth + 1});
        stack.push_back({left, p.begin, p.begin + n_left, p.depth + 1});
    }
    return TreeModel(std::move(nodes), std::move(oob), n_features);
}

}  // namespace

std::optional<SplitCandidate> best_split(const FeatureMatrix& x, std::span<const std::size_t> rows,
                                         std::span<const std::size_t> features) {
    if (rows.empty()) throw ArgumentError("best_split needs at least one row");
    for (auto f : features) {
        if (f >= x.features()) throw ArgumentError("feature index out of range");
    }
    std::vector<std::size_t> sorted_features(features.begin(), features.end());
    std::sort(sorted_features.begin(), sorted_features.end());
    sorted_features.erase(std::unique(sorted_features.begin(), sorted_features.end()),
                          sorted_features.end());
    const auto m = multiplicity_of(rows, x.rows());
    Splitter splitter(x, sort_orders(x), m);
    const auto parent = splitter.counts(0, splitter.size());
    return splitter.best(0, splitter.size(), sorted_features, parent);
}

std::optional<SplitCandidate> best_split(const Dataset& d, std::span<const std::size_t> rows,
                                         std::span<const std::size_t> features) {
    return best_split(FeatureMatrix(d), rows, features);
}

TreeModel::TreeModel(std::vector<TreeNode> nodes, std::vector<std::size_t> oob_rows,
                     std::size_t feature_count)
    : nodes_(std::move(nodes)), oob_rows_(std::move(oob_rows)), feature_count_(feature_count) {
    if (nodes_.empty()) throw ArgumentError("a tree needs at least one node");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        if (n.is_leaf()) continue;
        const auto size = static_cast<std::int32_t>(nodes_.size());
        if (n.left <= 0 || n.right <= 0 || n.left >= size || n.right >= size ||
            static_cast<std::size_t>(n.feature) >= feature_count_) {
            throw ArgumentError("malformed tree node " + std::to_string(i));
        }
    }
}

std::size_t TreeModel::depth() const {
    std::vector<std::size_t> d(nodes_.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, d[i]);
        if (!nodes_[i].is_leaf()) {
            d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
        }
    }
    return deepest;
}

bool TreeModel::uses_feature(std::size_t f) const {
    return std::any_of(nodes_.begin(), nodes_.end(), [&](const TreeNode& n) {
        return !n.is_leaf() && static_cast<std::size_t>(n.feature) == f;
    });
}

bool operator==(const TreeNode& a, const TreeNode& b) {
    return a.feature == b.feature && a.categorical == b.categorical &&
           a.threshold == b.threshold && a.left == b.left && a.right == b.right &&
           a.leaf_class == b.leaf_class && a.counts == b.counts && a.decrease == b.decrease &&
           a.weight == b.weight;
}

bool TreeModel::operator==(const TreeModel& other) const {
    return nodes_ == other.nodes_ && oob_rows_ == other.oob_rows_ &&
           feature_count_ == other.feature_count_;
}

TreeModel train_tree(const FeatureMatrix& x, std::span<const std::size_t> rows,
                     const TreeConfig& cfg, std::uint64_t seed) {
    if (rows.empty()) throw ArgumentError("train_tree needs at least one row");
    auto rng = derive_rng(seed);
    const auto m = multiplicity_of(rows, x.rows());
    return grow(x, sort_orders(x), m, cfg, rng, {});
}

TreeModel train_tree(const Dataset& d, std::span<const std::size_t> rows, const TreeConfig& cfg,
                     std::uint64_t seed) {
    return train_tree(FeatureMatrix(d), rows, cfg, seed);
}

ForestModel train_forest(const FeatureMatrix& x, const ForestConfig& cfg, std::uint64_t seed) {
    if (cfg.trees == 0) throw ArgumentError("a forest needs at least one tree");
    if (x.rows() < 2) throw TrainingError("forest training needs at least two rows");
    const auto attacks = std::count(x.labels().begin(), x.labels().end(), kAttack);
    if (attacks == 0 || static_cast<std::size_t>(attacks) == x.rows()) {
        throw TrainingError("forest training data contains a single class");
    }
    const std::size_t n = x.rows();
    const std::size_t n_features = x.features();
    ForestModel model;
    model.feature_names = x.names();
    for (std::size_t f = 0; f < n_features; ++f) model.categorical.push_back(x.categorical(f));
    model.seed = seed;
    model.bootstrap = cfg.bootstrap;
    model.max_features =
        cfg.max_features != 0
            ? std::min(cfg.max_features, n_features)
            : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_features))));
    const TreeConfig tree_cfg{cfg.max_depth, cfg.min_samples_split, model.max_features};

    const auto order = sort_orders(x);
    model.trees.resize(cfg.trees);
    parallel_for(cfg.trees, cfg.jobs, [&](std::size_t t) {
        auto rng = derive_rng(seed, {t});
        std::vector<std::uint32_t> m(n, 1);
        std::vector<std::size_t> oob;
        if (cfg.bootstrap) {
            std::fill(m.begin(), m.end(), 0u);
            std::uniform_int_distribution<std::size_t> draw(0, n - 1);
            for (std::size_t i = 0; i < n; ++i) ++m[draw(rng)];
            for (std::size_t r = 0; r < n; ++r) {
                if (m[r] == 0) oob.push_back(r);
            }
        }
        model.trees[t] = grow(x, order, m, tree_cfg, rng, std::move(oob));
    });
    return model;
}

ForestModel train_forest(const Dataset& d, const ForestConfig& cfg, std::uint64_t seed) {
    return train_forest(FeatureMatrix(d), cfg, seed);
}

ForestModel train_decision_tree(const Dataset& d, const TreeConfig& cfg, std::uint64_t seed) {
    const FeatureMatrix x(d);
    if (x.rows() == 0) throw TrainingError("decision tree training needs rows");
    ForestModel model;
    model.feature_names = x.names();
    for (std::size_t f = 0; f < x.features(); ++f) model.categorical.push_back(x.categorical(f));
    model.seed = seed;
    model.bootstrap = false;
    model.max_features = cfg.max_features == 0 ? x.features() : cfg.max_features;
    std::vector<std::size_t> rows(x.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    model.trees.push_back(train_tree(x, rows, cfg, seed));
    return model;
}

std::vector<std::uint8_t> ForestModel::predict(const FeatureMatrix& x) const {
    if (x.features() != feature_names.size()) {
        throw ArgumentError("feature count does not match the trained forest");
    }
    std::vector<std::uint8_t> out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        std::size_t votes = 0;
        for (const auto& t : trees) votes += t.predict_row(x, r);
        out[r] = 2 * votes >= trees.size() ? kAttack : kNormal;
    }
    return out;
}

FeatureMatrix ForestModel::inputs(const Dataset& d) const {
    return FeatureMatrix(d, feature_names);
}

std::vector<std::uint8_t> ForestModel::predict(const Dataset& d) const {
    return predict(inputs(d));
}

namespace {
constexpr int kForestFormatVersion = 1;
}

void save_forest(std::ostream& out, const ForestModel& m) {
    using nlohmann::json;
    json j;
    j["format"] = "lemda-forest";
    j["version"] = kForestFormatVersion;
    j["feature_names"] = m.feature_names;
    j["categorical"] = m.categorical;
    j["seed"] = m.seed;
    j["max_features"] = m.max_features;
    j["bootstrap"] = m.bootstrap;
    json trees = json::array();
    for (const auto& t : m.trees) {
        json nodes = json::array();
        for (const auto& n : t.nodes()) {
            nodes.push_back({n.feature, n.categorical, n.threshold, n.left, n.right, n.leaf_class,
                             n.counts.normal, n.counts.attack, n.decrease, n.weight});
        }
        trees.push_back({{"nodes", nodes}, {"oob", t.oob_rows()}});
    }
    j["trees"] = std::move(trees);
    out << j.dump() << '\n';
}

ForestModel load_forest(std::istream& in) {
    using nlohmann::json;
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed forest file: ") + e.what(), 0, "");
    }
    if (j.value("format", "") != "lemda-forest") throw ParseError("not a forest file", 0, "");
    if (j.value("version", 0) != kForestFormatVersion) {
        throw ParseError("unsupported forest format version", 0, "");
    }
    ForestModel m;
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.categorical = j.at("categorical").get<std::vector<std::uint8_t>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.max_features = j.at("max_features").get<std::size_t>();
    m.bootstrap = j.at("bootstrap").get<bool>();
    for (const auto& t : j.at("trees")) {
        std::vector<TreeNode> nodes;
        for (const auto& a : t.at("nodes")) {
            TreeNode n;
            n.feature = a.at(0).get<std::int32_t>();
            n.categorical = a.at(1).get<bool>();
            n.threshold = a.at(2).get<double>();
            n.left = a.at(3).get<std::int32_t>();
            n.right = a.at(4).get<std::int32_t>();
            n.leaf_class = a.at(5).get<std::uint8_t>();
            n.counts = {a.at(6).get<std::uint64_t>(), a.at(7).get<std::uint64_t>()};
            n.decrease = a.at(8).get<double>();
            n.weight = a.at(9).get<double>();
            nodes.push_back(n);
        }
        m.trees.emplace_back(std::move(nodes), t.at("oob").get<std::vector<std::size_t>>(),
                             m.feature_names.size());
    }
    return m;
}

}  // namespace lemda
