#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lemda/dataset.hpp"

namespace lemda {

struct MlpHyper {
    std::size_t epochs = 20;
    std::size_t batch = 1000;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    std::size_t hidden = 20;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
};

// Network inputs (already standardized) with real-valued targets in [0, 1].
struct Batch {
    std::size_t inputs = 0;
    std::vector<double> x;  // row-major, rows * inputs
    std::vector<double> y;

    std::size_t rows() const noexcept { return y.size(); }
    std::span<const double> row(std::size_t r) const { return {x.data() + r * inputs, inputs}; }
};

// inputs -> hidden (tanh) -> 1 (sigmoid), trained with Adam on binary
// cross-entropy. Parameters live in one flat vector laid out as
// [w1 (hidden x inputs, row-major), b1 (hidden), w2 (hidden), b2].
class MlpModel {
public:
    MlpModel() = default;
    MlpModel(std::size_t inputs, std::size_t hidden, std::uint64_t seed);

    std::size_t inputs() const noexcept { return inputs_; }
    std::size_t hidden() const noexcept { return hidden_; }
    std::size_t parameter_count() const noexcept { return params_.size(); }

    std::vector<double>& params() noexcept { return params_; }
    const std::vector<double>& params() const noexcept { return params_; }
    double w1(std::size_t h, std::size_t i) const { return params_[h * inputs_ + i]; }
    double b1(std::size_t h) const { return params_[hidden_ * inputs_ + h]; }
    double w2(std::size_t h) const { return params_[hidden_ * inputs_ + hidden_ + h]; }
    double b2() const { return params_.back(); }
    std::size_t w1_index(std::size_t h, std::size_t i) const { return h * inputs_ + i; }
    std::size_t b2_index() const { return params_.size() - 1; }

    // Pre-sigmoid output for one standardized input row.
    double logit(std::span<const double> x) const;
    double output(std::span<const double> x) const;

    // Mean BCE over the batch and its gradient w.r.t. every parameter.
    double loss(const Batch& b) const;
    std::vector<double> gradient(const Batch& b) const;

    // One Adam update on `b`; returns the batch loss before the update.
    double adam_step(const Batch& b, const MlpHyper& h);
    std::size_t steps() const noexcept { return step_; }

    // Standardization applied to raw Dataset features before the network.
    std::vector<std::string> feature_names;
    std::vector<double> means;
    std::vector<double> scales;
    // Mean training loss per epoch.
    std::vector<double> epoch_loss;

private:
    std::size_t inputs_ = 0;
    std::size_t hidden_ = 0;
    std::vector<double> params_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::size_t step_ = 0;
};

// Standardized network inputs for the model's features, labels as targets.
Batch make_batch(const MlpModel& m, const Dataset& d);

MlpModel train_mlp(const Dataset& d, const MlpHyper& hyper);

std::vector<double> predict_proba(const MlpModel& m, const Dataset& d);
// Label 1 iff the sigmoid output is >= threshold.
std::vector<std::uint8_t> predict_mlp(const MlpModel& m, const Dataset& d, double threshold = 0.5);

// Max over parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-12)
// using central differences of width eps.
double gradient_check(const MlpModel& m, const Batch& batch, double eps = 1e-5);

}  // namespace lemda
