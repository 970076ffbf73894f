#include <gtest/gtest.h>

#include <random>

#include "lemda/error.hpp"
#include "lemda/pca.hpp"
#include "support.hpp"

using namespace lemda;
using lemda::support::numeric_dataset;

namespace {

std::vector<double> column_of(const SquareMatrix& m, std::size_t c) {
    std::vector<double> v(m.size());
    for (std::size_t r = 0; r < m.size(); ++r) v[r] = m(r, c);
    return v;
}

Dataset gaussian_columns(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0, 1);
    std::vector<std::vector<double>> data(cols, std::vector<double>(rows));
    for (auto& c : data) {
        for (auto& v : c) v = z(rng);
    }
    std::vector<std::uint8_t> y(rows);
    for (std::size_t r = 0; r < rows; ++r) y[r] = r % 2;
    return numeric_dataset(data, y);
}

}  // namespace

TEST(Jacobi, IdentityThree) {
    const auto e = jacobi_eigen(SquareMatrix::identity(3));
    EXPECT_EQ(e.values, (std::vector<double>{1, 1, 1}));
}

TEST(Jacobi, TwoByTwo) {
    SquareMatrix a(2);
    a(0, 0) = 2;
    a(0, 1) = 1;
    a(1, 0) = 1;
    a(1, 1) = 2;
    const auto e = jacobi_eigen(a);
    EXPECT_NEAR(e.values[0], 3.0, 1e-12);
    EXPECT_NEAR(e.values[1], 1.0, 1e-12);
    const std::vector<double> flat{2, 1, 1, 2};
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_LT(support::eigen_residual(flat, 2, column_of(e.vectors, i), e.values[i]), 1e-10);
    }
}

TEST(Jacobi, RandomSixBySixResiduals) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-3, 3);
    SquareMatrix a(6);
    std::vector<double> flat(36);
    for (std::size_t r = 0; r < 6; ++r) {
        for (std::size_t c = r; c < 6; ++c) {
            a(r, c) = a(c, r) = u(rng);
        }
    }
    for (std::size_t r = 0; r < 6; ++r) {
        for (std::size_t c = 0; c < 6; ++c) flat[r * 6 + c] = a(r, c);
    }
    const auto e = jacobi_eigen(a);
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_LT(support::eigen_residual(flat, 6, column_of(e.vectors, i), e.values[i]), 1e-7);
        if (i > 0) EXPECT_GE(e.values[i - 1], e.values[i]);
    }
}

TEST(Jacobi, AsymmetricIsArgumentError) {
    SquareMatrix a(2);
    a(0, 1) = 1;
    EXPECT_THROW(jacobi_eigen(a), ArgumentError);
}

TEST(Jacobi, SweepLimitIsNumericError) {
    SquareMatrix a(3);
    a(0, 1) = a(1, 0) = 1;
    a(1, 2) = a(2, 1) = 2;
    a(0, 2) = a(2, 0) = 0.5;
    EXPECT_THROW(jacobi_eigen(a, 1e-10, 0), NumericError);
}

TEST(ComponentsForThreshold, HandRatios) {
    EXPECT_EQ(components_for_threshold({2.0 / 3.0, 1.0 / 3.0}, 0.6), 1u);
    EXPECT_EQ(components_for_threshold({2.0 / 3.0, 1.0 / 3.0}, 0.95), 2u);
    EXPECT_EQ(components_for_threshold({0.5, 0.3, 0.2}, 0.8), 2u);
}

TEST(FitPca, TwoIndependentFeatures) {
    const auto m = fit_pca(gaussian_columns(4000, 2, 1), 0.95);
    EXPECT_NEAR(m.explained_ratio[0], 0.5, 0.05);
    EXPECT_NEAR(m.explained_ratio[1], 0.5, 0.05);
    EXPECT_EQ(m.n_components, 2u);
}

TEST(FitPca, DuplicatedColumnLosesOneComponent) {
    auto base = gaussian_columns(500, 3, 2);
    std::vector<Column> cols = base.columns();
    auto dup = cols[0];
    dup.schema.name = "dup";
    cols.push_back(dup);
    const auto d = base.with_columns(std::move(cols));
    const auto m = fit_pca(d, 0.99);
    EXPECT_LT(m.eigenvalues.back(), 1e-9);
    EXPECT_EQ(m.n_components, 3u);
}

TEST(FitPca, DropsConstantColumns) {
    auto d = numeric_dataset({{1, 2, 3, 4}, {5, 5, 5, 5}, {4, 1, 3, 2}}, {0, 1, 0, 1});
    const auto m = fit_pca(d, 0.95);
    EXPECT_EQ(m.dropped, (std::vector<std::string>{"f1"}));
    EXPECT_EQ(m.input_names.size(), 2u);
}

TEST(FitPca, NeedsTwoRows) {
    const auto d = numeric_dataset({{1.0}}, {1});
    EXPECT_THROW(fit_pca(d), ArgumentError);
}

TEST(TransformPca, FullBasisPreservesNorms) {
    const auto d = gaussian_columns(300, 4, 3);
    const auto m = fit_pca(d, 1.0);
    ASSERT_EQ(m.n_components, 4u);
    const auto t = transform_pca(m, d);
    for (std::size_t r = 0; r < d.rows(); ++r) {
        double in = 0, out = 0;
        for (std::size_t c = 0; c < 4; ++c) {
            const double z = (d.column(c).values[r] - m.means[c]) / m.scales[c];
            in += z * z;
            const double p = t.column(c).values[r];
            out += p * p;
        }
        EXPECT_NEAR(in, out, 1e-8);
    }
}

TEST(TransformPca, TrainingProjectionIsCentered) {
    const auto d = gaussian_columns(250, 5, 4);
    const auto m = fit_pca(d, 0.9);
    const auto t = transform_pca(m, d);
    EXPECT_EQ(t.column(0).name(), "pc1");
    EXPECT_EQ(t.label_name(), "label");
    for (std::size_t c = 0; c < m.n_components; ++c) {
        double mean = 0;
        for (double v : t.column(c).values) mean += v;
        EXPECT_NEAR(mean / static_cast<double>(d.rows()), 0.0, 1e-8);
    }
}

TEST(TransformPca, MissingColumnIsArgumentError) {
    const auto m = fit_pca(gaussian_columns(20, 2, 5), 0.95);
    EXPECT_THROW(transform_pca(m, numeric_dataset({{1, 2}}, {0, 1})), ArgumentError);
}
