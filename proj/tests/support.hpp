#pragma once

// Fixtures and brute-force oracles shared by the unit, property and
// acceptance binaries. Nothing here calls into the code it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lemda/dataset.hpp"

namespace lemda::support {

inline Dataset numeric_dataset(const std::vector<std::vector<double>>& columns,
                               std::vector<std::uint8_t> labels) {
    std::vector<Column> cols;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        cols.push_back(make_numeric("f" + std::to_string(i), columns[i]));
    }
    return Dataset(std::move(cols), "label", std::move(labels));
}

inline std::vector<std::uint8_t> labels_of(std::initializer_list<int> v) {
    std::vector<std::uint8_t> out;
    for (int x : v) out.push_back(static_cast<std::uint8_t>(x));
    return out;
}

// Gini written out from class proportions, independent of lemda::gini.
inline double oracle_gini(double normal, double attack) {
    const double n = normal + attack;
    if (n == 0) return 0;
    const double a = attack / n;
    return 1.0 - a * a - (1.0 - a) * (1.0 - a);
}

struct OracleSplit {
    std::size_t feature = 0;
    double threshold = 0;
    double decrease = 0;
};

// Every candidate of every feature, in (feature, threshold) order. Numeric
// candidates sit halfway between consecutive distinct values; categorical
// ones isolate a single code.
inline std::vector<OracleSplit> enumerate_splits(const std::vector<std::vector<double>>& x,
                                                 const std::vector<std::uint8_t>& y,
                                                 const std::vector<std::size_t>& rows,
                                                 const std::vector<bool>& categorical) {
    std::vector<OracleSplit> out;
    double pn = 0, pa = 0;
    for (auto r : rows) (y[r] ? pa : pn) += 1;
    const double total = pn + pa;
    const double parent = oracle_gini(pn, pa);
    for (std::size_t f = 0; f < x.size(); ++f) {
        std::vector<double> distinct;
        for (auto r : rows) distinct.push_back(x[f][r]);
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        if (distinct.size() < 2) continue;
        std::vector<double> thresholds;
        if (categorical[f]) {
            thresholds = distinct;
        } else {
            for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
                thresholds.push_back(distinct[i] + (distinct[i + 1] - distinct[i]) / 2.0);
            }
        }
        for (double t : thresholds) {
            double ln = 0, la = 0;
            for (auto r : rows) {
                const bool left = categorical[f] ? x[f][r] == t : x[f][r] <= t;
                if (left) (y[r] ? la : ln) += 1;
            }
            const double rn = pn - ln, ra = pa - la;
            const double d = parent - (ln + la) / total * oracle_gini(ln, la) -
                             (rn + ra) / total * oracle_gini(rn, ra);
            out.push_back({f, t, d});
        }
    }
    return out;
}

// Best candidate: the first, in (feature, threshold) order, whose decrease is
// within `tol` of the maximum. Nothing for pure nodes or unsplittable data.
inline std::optional<OracleSplit> oracle_best_split(const std::vector<std::vector<double>>& x,
                                                    const std::vector<std::uint8_t>& y,
                                                    const std::vector<std::size_t>& rows,
                                                    const std::vector<bool>& categorical,
                                                    double tol = 1e-12) {
    std::size_t attacks = 0;
    for (auto r : rows) attacks += y[r];
    if (attacks == 0 || attacks == rows.size()) return std::nullopt;
    const auto all = enumerate_splits(x, y, rows, categorical);
    if (all.empty()) return std::nullopt;
    double best = all.front().decrease;
    for (const auto& s : all) best = std::max(best, s.decrease);
    for (const auto& s : all) {
        if (s.decrease >= best - tol) return s;
    }
    return std::nullopt;
}

// ‖A v − λ v‖∞ for one eigenpair, with A row-major n×n and v a column.
inline double eigen_residual(const std::vector<double>& a, std::size_t n,
                             const std::vector<double>& v, double lambda) {
    double worst = 0;
    for (std::size_t r = 0; r < n; ++r) {
        double av = 0;
        for (std::size_t c = 0; c < n; ++c) av += a[r * n + c] * v[c];
        worst = std::max(worst, std::abs(av - lambda * v[r]));
    }
    return worst;
}

}  // namespace lemda::support
