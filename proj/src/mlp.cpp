#include "lemda/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lemda/error.hpp"
#include "lemda/rng.hpp"

namespace lemda {

namespace {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// BCE written on the logit: softplus(z) - y*z. Finite for every finite z
// and exactly differentiable, with derivative sigmoid(z) - y.
double bce_from_logit(double z, double y) {
    return std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace

MlpModel::MlpModel(std::size_t inputs, std::size_t hidden, std::uint64_t seed)
    : inputs_(inputs), hidden_(hidden) {
    if (inputs == 0 || hidden == 0) throw ArgumentError("MLP needs at least one input and unit");
    params_.assign(hidden * inputs + 2 * hidden + 1, 0.0);
    auto rng = derive_rng(seed, {0x1a1});
    const double limit1 = std::sqrt(6.0 / static_cast<double>(inputs + hidden));
    const double limit2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
    std::uniform_real_distribution<double> u1(-limit1, limit1);
    std::uniform_real_distribution<double> u2(-limit2, limit2);
    for (std::size_t i = 0; i < hidden * inputs; ++i) params_[i] = u1(rng);
    for (std::size_t h = 0; h < hidden; ++h) params_[hidden * inputs + hidden + h] = u2(rng);
    m_.assign(params_.size(), 0.0);
    v_.assign(params_.size(), 0.0);
}

double MlpModel::logit(std::span<const double> x) const {
    double z = b2();
    for (std::size_t h = 0; h < hidden_; ++h) {
        double a = b1(h);
        for (std::size_t i = 0; i < inputs_; ++i) a += w1(h, i) * x[i];
        z += w2(h) * std::tanh(a);
    }
    return z;
}

double MlpModel::output(std::span<const double> x) const { return sigmoid(logit(x)); }

double MlpModel::loss(const Batch& b) const {
    if (b.rows() == 0) throw ArgumentError("empty batch");
    double total = 0;
    for (std::size_t r = 0; r < b.rows(); ++r) total += bce_from_logit(logit(b.row(r)), b.y[r]);
    return total / static_cast<double>(b.rows());
}

std::vector<double> MlpModel::gradient(const Batch& b) const {
    if (b.rows() == 0) throw ArgumentError("empty batch");
    if (b.inputs != inputs_) throw ArgumentError("batch width does not match the network");
    std::vector<double> g(params_.size(), 0.0);
    std::vector<double> act(hidden_);
    const double scale = 1.0 / static_cast<double>(b.rows());
    const std::size_t b1_off = hidden_ * inputs_;
    const std::size_t w2_off = b1_off + hidden_;
    for (std::size_t r = 0; r < b.rows(); ++r) {
        const auto x = b.row(r);
        double z = b2();
        for (std::size_t h = 0; h < hidden_; ++h) {
            double a = b1(h);
            for (std::size_t i = 0; i < inputs_; ++i) a += w1(h, i) * x[i];
            act[h] = std::tanh(a);
            z += w2(h) * act[h];
        }
        const double dz = (sigmoid(z) - b.y[r]) * scale;
        g.back() += dz;
        for (std::size_t h = 0; h < hidden_; ++h) {
            g[w2_off + h] += dz * act[h];
            const double da = dz * w2(h) * (1.0 - act[h] * act[h]);
            g[b1_off + h] += da;
            for (std::size_t i = 0; i < inputs_; ++i) g[h * inputs_ + i] += da * x[i];
        }
    }
    return g;
}

double MlpModel::adam_step(const Batch& b, const MlpHyper& h) {
    const double before = loss(b);
    const auto g = gradient(b);
    ++step_;
    const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        m_[i] = h.beta1 * m_[i] + (1.0 - h.beta1) * g[i];
        v_[i] = h.beta2 * v_[i] + (1.0 - h.beta2) * g[i] * g[i];
        const double m_hat = m_[i] / c1;
        const double v_hat = v_[i] / c2;
        params_[i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.epsilon);
    }
    return before;
}

Batch make_batch(const MlpModel& m, const Dataset& d) {
    std::vector<const std::vector<double>*> cols;
    for (const auto& name : m.feature_names) {
        const auto index = d.find_column(name);
        if (!index) throw ArgumentError("dataset lacks MLP input '" + name + "'");
        cols.push_back(&d.column(*index).values);
    }
    Batch b;
    b.inputs = cols.size();
    b.x.resize(d.rows() * b.inputs);
    b.y.resize(d.rows());
    for (std::size_t r = 0; r < d.rows(); ++r) {
        for (std::size_t i = 0; i < b.inputs; ++i) {
            b.x[r * b.inputs + i] = ((*cols[i])[r] - m.means[i]) / m.scales[i];
        }
        b.y[r] = d.labels()[r];
    }
    return b;
}

MlpModel train_mlp(const Dataset& d, const MlpHyper& hyper) {
    if (hyper.batch == 0) throw ArgumentError("batch size must be positive");
    const auto features = d.feature_columns();
    if (features.empty()) throw TrainingError("MLP needs at least one feature column");
    if (d.attack_count() == 0 || d.attack_count() == d.rows()) {
        throw TrainingError("MLP training data contains a single class");
    }
    MlpModel m(features.size(), hyper.hidden, hyper.seed);
    const double n = static_cast<double>(d.rows());
    for (auto i : features) {
        const auto& c = d.column(i);
        if (c.kind() == ColumnKind::categorical) {
            throw ArgumentError("MLP needs numeric inputs; encode '" + c.name() + "' first");
        }
        const double mean = std::accumulate(c.values.begin(), c.values.end(), 0.0) / n;
        double ss = 0;
        for (double v : c.values) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / n);
        m.feature_names.push_back(c.name());
        m.means.push_back(mean);
        m.scales.push_back(sd > 1e-12 ? sd : 1.0);
    }
    const Batch all = make_batch(m, d);

    std::vector<std::size_t> order(d.rows());
    Batch batch;
    batch.inputs = all.inputs;
    for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        auto rng = derive_rng(hyper.seed, {0xe90c, epoch});
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_total = 0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += hyper.batch, ++batch_index) {
            const std::size_t end = std::min(order.size(), start + hyper.batch);
            batch.x.clear();
            batch.y.clear();
            for (std::size_t k = start; k < end; ++k) {
                const auto row = all.row(order[k]);
                batch.x.insert(batch.x.end(), row.begin(), row.end());
                batch.y.push_back(all.y[order[k]]);
            }
            const double l = m.adam_step(batch, hyper);
            if (!std::isfinite(l)) {
                throw NumericError("non-finite loss in epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batch_index));
            }
            epoch_total += l * static_cast<double>(end - start);
        }
        m.epoch_loss.push_back(epoch_total / n);
    }
    return m;
}

std::vector<double> predict_proba(const MlpModel& m, const Dataset& d) {
    const Batch b = make_batch(m, d);
    std::vector<double> out(b.rows());
    for (std::size_t r = 0; r < b.rows(); ++r) out[r] = m.output(b.row(r));
    return out;
}

std::vector<std::uint8_t> predict_mlp(const MlpModel& m, const Dataset& d, double threshold) {
    const auto p = predict_proba(m, d);
    std::vector<std::uint8_t> out(p.size());
    for (std::size_t r = 0; r < p.size(); ++r) out[r] = p[r] >= threshold ? kAttack : kNormal;
    return out;
}

double gradient_check(const MlpModel& m, const Batch& batch, double eps) {
    if (!(eps > 0)) throw ArgumentError("finite-difference step must be positive");
    const auto analytic = m.gradient(batch);
    MlpModel probe = m;
    double worst = 0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double original = probe.params()[i];
        probe.params()[i] = original + eps;
        const double up = probe.loss(batch);
        probe.params()[i] = original - eps;
        const double down = probe.loss(batch);
        probe.params()[i] = original;
        const double numeric = (up - down) / (2.0 * eps);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-12});
        worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    return worst;
}

}  // namespace lemda
