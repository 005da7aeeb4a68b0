#pragma once

#include "thc/model.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <random>
#include <vector>

namespace thc {

enum class OptimizerKind { Adam, Sgd };

struct TrainConfig {
    int epochs = 100;
    std::size_t batch_size = 8;
    double learning_rate = 1e-3;
    Alpha alpha{1.0};
    LossWeights loss_weights{};
    std::uint64_t seed = 0;
    OptimizerKind optimizer = OptimizerKind::Adam;

    void validate() const {
        if (epochs < 1) throw Error(Errc::InvalidConfig, "epochs must be >= 1");
        if (batch_size < 1) throw Error(Errc::InvalidConfig, "batch_size must be >= 1");
        if (!(learning_rate > 0.0)) throw Error(Errc::InvalidConfig, "learning_rate must be > 0");
        loss_weights.validate();
    }
};

class Optimizer {
public:
    virtual ~Optimizer() = default;
    virtual void step(std::vector<ParamBlock>& params, const Gradients& grads) = 0;
};

class Sgd final : public Optimizer {
public:
    explicit Sgd(double lr) : lr_(lr) {}

    void step(std::vector<ParamBlock>& params, const Gradients& grads) override {
        for (std::size_t b = 0; b < params.size(); ++b)
            for (std::size_t i = 0; i < params[b].values.size(); ++i) params[b].values[i] -= lr_ * grads.blocks[b][i];
    }

private:
    double lr_;
};

/// Adam with bias-corrected moments.
class Adam final : public Optimizer {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(std::vector<ParamBlock>& params, const Gradients& grads) override {
        if (m_.empty()) {
            for (const auto& b : params) {
                m_.emplace_back(b.values.size(), 0.0);
                v_.emplace_back(b.values.size(), 0.0);
            }
        }
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t b = 0; b < params.size(); ++b) {
            auto& w = params[b].values;
            const auto& g = grads.blocks[b];
            for (std::size_t i = 0; i < w.size(); ++i) {
                m_[b][i] = beta1_ * m_[b][i] + (1.0 - beta1_) * g[i];
                v_[b][i] = beta2_ * v_[b][i] + (1.0 - beta2_) * g[i] * g[i];
                w[i] -= lr_ * (m_[b][i] / c1) / (std::sqrt(v_[b][i] / c2) + eps_);
            }
        }
    }

private:
    double lr_, beta1_, beta2_, eps_;
    std::vector<std::vector<double>> m_, v_;
    long t_ = 0;
};

inline std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, double lr) {
    if (kind == OptimizerKind::Sgd) return std::make_unique<Sgd>(lr);
    return std::make_unique<Adam>(lr);
}

/// A dataset is a Batch holding every item.
using Dataset = Batch;

/// Copies the items at `indices` into a new batch.
inline Batch take(const Batch& data, std::span<const std::size_t> indices) {
    Shape vshape = data.volumes.shape();
    vshape[0] = indices.size();
    Batch out{Tensor(vshape), Tensor(), {}};
    const std::size_t vol = data.volumes.item_size();
    const std::size_t dim = data.clinical.empty() ? 0 : data.clinical.size() / data.size();
    std::vector<double> clin;
    clin.reserve(indices.size() * dim);
    out.labels.reserve(indices.size());
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const std::size_t i = indices[k];
        auto src = data.volumes.item(i);
        std::copy(src.begin(), src.end(), out.volumes.storage().begin() + static_cast<std::ptrdiff_t>(k * vol));
        if (dim) {
            auto c = data.clinical.data().subspan(i * dim, dim);
            clin.insert(clin.end(), c.begin(), c.end());
        }
        out.labels.push_back(data.labels[i]);
    }
    if (dim) out.clinical = Tensor({indices.size(), dim}, std::move(clin));
    return out;
}

struct EpochLoss {
    int epoch = 0;
    double reconstruction = 0.0;
    double prediction = 0.0;
    double total = 0.0;
};

struct TrainResult {
    Model model;
    std::vector<EpochLoss> trace;
};

/// Mini-batch training on the weighted total loss; deterministic given the config seed.
/// Throws NonFiniteLossError naming the epoch if any batch loss is NaN/inf.
inline TrainResult train(Model model, const Dataset& data, const TrainConfig& config) {
    config.validate();
    if (data.size() == 0) throw Error(Errc::EmptyDataset, "training set is empty");

    auto optimizer = make_optimizer(config.optimizer, config.learning_rate);
    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<EpochLoss> trace;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        EpochLoss sum{epoch};
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const Batch batch = take(data, std::span(order).subspan(start, end - start));
            LossBreakdown loss;
            Gradients grads;
            try {
                const auto out = model.record_forward(batch);
                loss = model.evaluate_loss(out, batch, config.alpha, config.loss_weights);
                grads = model.backward(batch, config.alpha, config.loss_weights);
            } catch (const Error& e) {
                if (e.code() == Errc::NonFiniteLoss) throw NonFiniteLossError(epoch, e.what());
                throw;
            }
            const double w = static_cast<double>(batch.size());
            sum.reconstruction += w * loss.reconstruction;
            sum.prediction += w * loss.prediction;
            sum.total += w * loss.total;
            optimizer->step(model.mutable_params(), grads);
        }
        const double n = static_cast<double>(data.size());
        sum.reconstruction /= n;
        sum.prediction /= n;
        sum.total /= n;
        if (!std::isfinite(sum.total)) throw NonFiniteLossError(epoch, "epoch mean loss is not finite");
        trace.push_back(sum);
    }
    return {std::move(model), std::move(trace)};
}

inline void write_loss_trace(const std::vector<EpochLoss>& trace, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot create " + path.string());
    out << "epoch,rec_loss,pred_loss,total_loss\n";
    out.precision(17);
    for (const auto& e : trace) {
        out << e.epoch << ',' << e.reconstruction << ',' << e.prediction << ',' << e.total << '\n';
    }
    if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

} // namespace thc
