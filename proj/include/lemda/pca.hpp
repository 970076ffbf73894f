#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lemda/dataset.hpp"

namespace lemda {

// Dense row-major square matrix, just enough for the eigensolver.
class SquareMatrix {
public:
    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}
    static SquareMatrix identity(std::size_t n);

    std::size_t size() const noexcept { return n_; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * n_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * n_ + c]; }

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

struct EigenDecomposition {
    std::vector<double> values;  // descending
    SquareMatrix vectors;        // column i pairs with values[i]
    std::size_t sweeps = 0;
};

// Cyclic Jacobi rotations until every off-diagonal entry is below `tol`.
// Throws ArgumentError on an asymmetric input and NumericError if 100
// sweeps are not enough.
EigenDecomposition jacobi_eigen(const SquareMatrix& a, double tol = 1e-10,
                                std::size_t max_sweeps = 100);

struct PcaModel {
    std::vector<std::string> input_names;  // columns kept after dropping constants
    std::vector<std::string> dropped;      // zero-variance columns
    std::vector<double> means;
    std::vector<double> scales;
    std::vector<double> eigenvalues;  // descending, clamped at zero
    SquareMatrix components;
    std::vector<double> explained_ratio;
    std::size_t n_components = 0;
    double threshold = 0.95;
};

// Smallest m whose cumulative ratio reaches `threshold`.
std::size_t components_for_threshold(const std::vector<double>& ratios, double threshold);

// Z-scores every feature column (sample stdev), drops zero-variance
// columns, eigendecomposes the covariance and keeps enough components to
// reach `threshold` explained variance.
PcaModel fit_pca(const Dataset& d, double threshold = 0.95);

// Projects onto the first n_components components; output columns pc1..pcN
// plus the label.
Dataset transform_pca(const PcaModel& m, const Dataset& d);

}  // namespace lemda
