#include "lemda/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lemda/error.hpp"

namespace lemda {

SquareMatrix SquareMatrix::identity(std::size_t n) {
    SquareMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

namespace {

double max_off_diagonal(const SquareMatrix& a) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = i + 1; j < a.size(); ++j) m = std::max(m, std::abs(a(i, j)));
    }
    return m;
}

// Zeroes a(p, q) with one rotation, accumulating it into v.
void rotate(SquareMatrix& a, SquareMatrix& v, std::size_t p, std::size_t q) {
    const double apq = a(p, q);
    if (apq == 0.0) return;
    const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
    const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
    const double c = 1.0 / std::sqrt(t * t + 1.0);
    const double s = t * c;
    const std::size_t n = a.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double akp = a(k, p);
        const double akq = a(k, q);
        a(k, p) = c * akp - s * akq;
        a(k, q) = s * akp + c * akq;
    }
    for (std::size_t k = 0; k < n; ++k) {
        const double apk = a(p, k);
        const double aqk = a(q, k);
        a(p, k) = c * apk - s * aqk;
        a(q, k) = s * apk + c * aqk;
    }
    a(p, q) = 0.0;
    a(q, p) = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double vkp = v(k, p);
        const double vkq = v(k, q);
        v(k, p) = c * vkp - s * vkq;
        v(k, q) = s * vkp + c * vkq;
    }
}

}  // namespace

EigenDecomposition jacobi_eigen(const SquareMatrix& input, double tol, std::size_t max_sweeps) {
    if (!(tol > 0)) throw ArgumentError("jacobi tolerance must be positive");
    const std::size_t n = input.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double scale = std::max({1.0, std::abs(input(i, j)), std::abs(input(j, i))});
            if (std::abs(input(i, j) - input(j, i)) > 1e-9 * scale) {
                throw ArgumentError("matrix is not symmetric at (" + std::to_string(i) + ", " +
                                    std::to_string(j) + ")");
            }
        }
    }
    SquareMatrix a = input;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) a(j, i) = a(i, j);
    }
    SquareMatrix v = SquareMatrix::identity(n);
    std::size_t sweeps = 0;
    while (max_off_diagonal(a) >= tol) {
        if (sweeps == max_sweeps) {
            throw NumericError("jacobi eigensolver did not converge in " +
                               std::to_string(max_sweeps) + " sweeps");
        }
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) rotate(a, v, p, q);
        }
        ++sweeps;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
    EigenDecomposition out{{}, SquareMatrix(n), sweeps};
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t src = order[c];
        out.values.push_back(a(src, src));
        // Sign convention: the largest-magnitude entry of each vector is positive.
        std::size_t peak = 0;
        for (std::size_t r = 1; r < n; ++r) {
            if (std::abs(v(r, src)) > std::abs(v(peak, src))) peak = r;
        }
        const double sign = v(peak, src) < 0 ? -1.0 : 1.0;
        for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = sign * v(r, src);
    }
    return out;
}

std::size_t components_for_threshold(const std::vector<double>& ratios, double threshold) {
    double cumulative = 0;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        cumulative += ratios[i];
        if (cumulative >= threshold - 1e-12) return i + 1;
    }
    return ratios.size();
}

PcaModel fit_pca(const Dataset& d, double threshold) {
    if (!(threshold > 0 && threshold <= 1)) throw ArgumentError("PCA threshold must be in (0, 1]");
    if (d.rows() < 2) throw ArgumentError("PCA needs at least two rows");
    PcaModel m;
    m.threshold = threshold;
    const double n = static_cast<double>(d.rows());
    std::vector<const std::vector<double>*> columns;
    for (auto i : d.feature_columns()) {
        const auto& c = d.column(i);
        if (c.kind() == ColumnKind::categorical) {
            throw ArgumentError("PCA needs numeric inputs; encode '" + c.name() + "' first");
        }
        const double mean = std::accumulate(c.values.begin(), c.values.end(), 0.0) / n;
        double ss = 0;
        for (double v : c.values) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / (n - 1.0));
        if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
            m.dropped.push_back(c.name());
            continue;
        }
        m.input_names.push_back(c.name());
        m.means.push_back(mean);
        m.scales.push_back(sd);
        columns.push_back(&c.values);
    }
    const std::size_t p = columns.size();
    if (p == 0) throw ArgumentError("PCA found no non-constant feature columns");

    std::vector<std::vector<double>> z(p, std::vector<double>(d.rows()));
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t r = 0; r < d.rows(); ++r) {
            z[j][r] = ((*columns[j])[r] - m.means[j]) / m.scales[j];
        }
    }
    SquareMatrix cov(p);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i; j < p; ++j) {
            double s = 0;
            for (std::size_t r = 0; r < d.rows(); ++r) s += z[i][r] * z[j][r];
            cov(i, j) = cov(j, i) = s / (n - 1.0);
        }
    }
    auto eig = jacobi_eigen(cov);
    for (auto& v : eig.values) v = std::max(v, 0.0);
    const double total = std::accumulate(eig.values.begin(), eig.values.end(), 0.0);
    if (!(total > 0)) throw NumericError("covariance spectrum is zero");
    for (double v : eig.values) m.explained_ratio.push_back(v / total);
    m.eigenvalues = std::move(eig.values);
    m.components = std::move(eig.vectors);
    m.n_components = components_for_threshold(m.explained_ratio, threshold);
    return m;
}

Dataset transform_pca(const PcaModel& m, const Dataset& d) {
    const std::size_t p = m.input_names.size();
    std::vector<const std::vector<double>*> columns;
    for (const auto& name : m.input_names) {
        auto i = d.find_column(name);
        if (!i) throw ArgumentError("dataset lacks PCA input column '" + name + "'");
        columns.push_back(&d.column(*i).values);
    }
    std::vector<Column> out;
    std::vector<double> z(p);
    for (std::size_t c = 0; c < m.n_components; ++c) {
        out.push_back(make_numeric("pc" + std::to_string(c + 1), std::vector<double>(d.rows())));
    }
    for (std::size_t r = 0; r < d.rows(); ++r) {
        for (std::size_t j = 0; j < p; ++j) z[j] = ((*columns[j])[r] - m.means[j]) / m.scales[j];
        for (std::size_t c = 0; c < m.n_components; ++c) {
            double s = 0;
            for (std::size_t j = 0; j < p; ++j) s += z[j] * m.components(j, c);
            out[c].values[r] = s;
        }
    }
    return d.with_columns(std::move(out));
}

}  // namespace lemda
