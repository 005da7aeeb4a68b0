#pragma once

// Multitask U-Net style network: a conv encoder (conv3x3 + ReLU + 2x2 max-pool
// per level), a prediction branch on the flattened bottleneck concatenated with
// the clinical vector (dense + ReLU, sigmoid output), and a decoder that
// upsamples, concatenates the matching encoder features and convolves, ending
// in a linear conv that reconstructs the input volume.

#include "thc/binary_io.hpp"
#include "thc/entropy.hpp"
#include "thc/error.hpp"
#include "thc/layers.hpp"
#include "thc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace thc {

struct ModelConfig {
    std::size_t input_height = 32;
    std::size_t input_width = 32;
    std::size_t input_channels = 1;
    std::size_t encoder_levels = 3;
    std::vector<std::size_t> channels_per_level{8, 16, 32};
    std::size_t clinical_dim = 0;
    std::vector<std::size_t> dense_widths{16};
    std::uint64_t seed = 0;

    void validate() const {
        if (input_height == 0 || input_width == 0 || input_channels == 0) {
            throw Error(Errc::InvalidConfig, "input shape must be positive");
        }
        if (channels_per_level.empty() || encoder_levels == 0) {
            throw Error(Errc::InvalidConfig, "need at least one encoder level");
        }
        if (encoder_levels != channels_per_level.size()) {
            throw Error(Errc::InvalidConfig, "encoder_levels must equal the number of channel entries");
        }
        if (encoder_levels >= 31) throw Error(Errc::InvalidConfig, "too many encoder levels");
        const std::size_t factor = std::size_t{1} << encoder_levels;
        if (input_height % factor != 0 || input_width % factor != 0) {
            throw Error(Errc::InvalidConfig, "H and W must be divisible by 2^encoder_levels = " + std::to_string(factor));
        }
        if (std::any_of(channels_per_level.begin(), channels_per_level.end(), [](auto c) { return c == 0; }) ||
            std::any_of(dense_widths.begin(), dense_widths.end(), [](auto c) { return c == 0; })) {
            throw Error(Errc::InvalidConfig, "layer widths must be positive");
        }
    }

    std::size_t bottleneck_features() const {
        const std::size_t factor = std::size_t{1} << encoder_levels;
        return (input_height / factor) * (input_width / factor) * channels_per_level.back();
    }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct ParamBlock {
    std::string name;
    Shape shape;
    std::vector<double> values;
};

struct Gradients {
    std::vector<std::vector<double>> blocks;

    double norm() const {
        double s = 0.0;
        for (const auto& b : blocks)
            for (double g : b) s += g * g;
        return std::sqrt(s);
    }
};

struct LossWeights {
    double reconstruction = 1.0;
    double prediction = 1.0;

    void validate() const {
        if (!(reconstruction >= 0.0) || !(prediction >= 0.0) || (reconstruction == 0.0 && prediction == 0.0)) {
            throw Error(Errc::InvalidConfig, "loss weights must be >= 0 and not both zero");
        }
    }
};

/// Stacked training items: volumes (N,H,W,C), clinical (N,D) or empty when D = 0.
struct Batch {
    Tensor volumes;
    Tensor clinical;
    std::vector<std::uint8_t> labels;

    std::size_t size() const noexcept { return labels.size(); }
};

struct MultitaskOutput {
    Tensor reconstruction;
    std::vector<double> recurrence_prob;
};

struct LossBreakdown {
    double reconstruction = 0.0;
    double prediction = 0.0;
    double total = 0.0;
};

/// (1/N) sum_n ||y_n - yhat_n||^2 with N the leading axis (a rank-1 tensor is one item).
inline LossValue mse_loss(const Tensor& target, const Tensor& prediction) {
    if (target.shape() != prediction.shape()) {
        throw Error(Errc::ShapeMismatch,
                    shape_to_string(target.shape()) + " vs " + shape_to_string(prediction.shape()));
    }
    if (target.empty()) throw Error(Errc::ShapeMismatch, "empty tensors");
    const std::size_t n = target.rank() >= 2 ? target.dim(0) : 1;
    double sum = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double d = target[i] - prediction[i];
        sum += d * d;
    }
    return LossValue(sum / static_cast<double>(n));
}

inline LossValue total_loss(LossValue rec, LossValue pred, LossWeights weights = {}) {
    return LossValue(weights.reconstruction * rec.value + weights.prediction * pred.value);
}

class Model {
public:
    explicit Model(ModelConfig config) : config_(std::move(config)) {
        config_.validate();
        build();
        initialize();
    }

    const ModelConfig& config() const noexcept { return config_; }
    const std::vector<ParamBlock>& params() const noexcept { return params_; }

    /// Mutable access invalidates any recorded forward pass.
    std::vector<ParamBlock>& mutable_params() noexcept {
        ++version_;
        return params_;
    }

    std::size_t parameter_count() const noexcept {
        std::size_t n = 0;
        for (const auto& b : params_) n += b.values.size();
        return n;
    }

    Shape input_shape() const { return {config_.input_height, config_.input_width, config_.input_channels}; }

    /// Inference. `volumes` is (H,W,C) or (N,H,W,C); `clinical` is (D), (N,D), or empty when D = 0.
    MultitaskOutput forward(const Tensor& volumes, const Tensor& clinical) const {
        const std::size_t n = check_inputs(volumes, clinical);
        MultitaskOutput out{Tensor(volumes.shape()), std::vector<double>(n)};
        const std::size_t vol = shape_size(input_shape());
        for (std::size_t i = 0; i < n; ++i) {
            SampleCache cache;
            run_sample(volume_item(volumes, i), clinical_item(clinical, i), cache);
            std::copy(cache.reconstruction.values.begin(), cache.reconstruction.values.end(),
                      out.reconstruction.storage().begin() + static_cast<std::ptrdiff_t>(i * vol));
            out.recurrence_prob[i] = cache.prob;
        }
        return out;
    }

    /// Forward pass that records the activations needed by `backward`.
    MultitaskOutput record_forward(const Batch& batch) {
        const std::size_t n = check_batch(batch);
        tape_.samples.assign(n, {});
        MultitaskOutput out{Tensor(batch.volumes.shape()), std::vector<double>(n)};
        const std::size_t vol = shape_size(input_shape());
        for (std::size_t i = 0; i < n; ++i) {
            auto& cache = tape_.samples[i];
            run_sample(volume_item(batch.volumes, i), clinical_item(batch.clinical, i), cache);
            std::copy(cache.reconstruction.values.begin(), cache.reconstruction.values.end(),
                      out.reconstruction.storage().begin() + static_cast<std::ptrdiff_t>(i * vol));
            out.recurrence_prob[i] = cache.prob;
        }
        tape_.fingerprint = fingerprint(batch);
        tape_.version = version_;
        tape_.valid = true;
        return out;
    }

    /// Gradient of the weighted total loss for the batch last passed to `record_forward`.
    Gradients backward(const Batch& batch, const Alpha& alpha, LossWeights weights = {}) const {
        if (!tape_.valid || tape_.version != version_ || tape_.samples.size() != batch.size() ||
            tape_.fingerprint != fingerprint(batch)) {
            throw Error(Errc::StaleTape, "backward requires a recorded forward pass of the same batch");
        }
        const std::size_t n = batch.size();
        const double inv_n = 1.0 / static_cast<double>(n);

        std::vector<double> probs(n);
        for (std::size_t i = 0; i < n; ++i) probs[i] = tape_.samples[i].prob;
        std::vector<double> dprob(n, 0.0);
        if (weights.prediction != 0.0) {
            dprob = binary_thc_loss_grad(BinaryBatch(batch.labels, probs), alpha);
            for (double& g : dprob) g *= weights.prediction;
        }

        Gradients grads;
        grads.blocks.reserve(params_.size());
        for (const auto& b : params_) grads.blocks.emplace_back(b.values.size(), 0.0);

        for (std::size_t i = 0; i < n; ++i) {
            const auto& cache = tape_.samples[i];
            const auto target = volume_item(batch.volumes, i);
            layers::FeatureMap drec(config_.input_height, config_.input_width, config_.input_channels);
            if (weights.reconstruction != 0.0) {
                const double scale = 2.0 * weights.reconstruction * inv_n;
                for (std::size_t j = 0; j < drec.values.size(); ++j) {
                    drec.values[j] = scale * (cache.reconstruction.values[j] - target[j]);
                }
            }
            const double q = cache.prob;
            const double dlogit = dprob[i] * q * (1.0 - q);
            backward_sample(cache, drec, dlogit, grads);
        }
        return grads;
    }

    LossBreakdown evaluate_loss(const MultitaskOutput& out, const Batch& batch, const Alpha& alpha,
                                LossWeights weights = {}) const {
        const bool finite = out.reconstruction.all_finite() &&
                            std::all_of(out.recurrence_prob.begin(), out.recurrence_prob.end(),
                                        [](double p) { return std::isfinite(p); });
        if (!finite) throw Error(Errc::NonFiniteLoss, "model output is not finite");
        LossBreakdown l;
        l.reconstruction = mse_loss(batch.volumes, out.reconstruction);
        l.prediction = binary_thc_loss(BinaryBatch(batch.labels, out.recurrence_prob), alpha);
        l.total = total_loss(LossValue(l.reconstruction), LossValue(l.prediction), weights);
        return l;
    }

    LossBreakdown batch_loss(const Batch& batch, const Alpha& alpha, LossWeights weights = {}) const {
        return evaluate_loss(forward(batch.volumes, batch.clinical), batch, alpha, weights);
    }

    /// Block indices reachable only through one head (used by ablation tests).
    std::vector<std::size_t> decoder_blocks() const {
        std::vector<std::size_t> idx;
        for (const auto& d : layout_.dec) {
            idx.push_back(d.weight);
            idx.push_back(d.bias);
        }
        idx.push_back(layout_.out.weight);
        idx.push_back(layout_.out.bias);
        return idx;
    }
    std::vector<std::size_t> prediction_blocks() const {
        std::vector<std::size_t> idx;
        for (const auto& d : layout_.dense) {
            idx.push_back(d.weight);
            idx.push_back(d.bias);
        }
        idx.push_back(layout_.head.weight);
        idx.push_back(layout_.head.bias);
        return idx;
    }

private:
    struct LayerRef {
        std::size_t weight = 0;
        std::size_t bias = 0;
        std::size_t out = 0; // output channels / units
    };

    struct Layout {
        std::vector<LayerRef> enc;
        std::vector<LayerRef> dense;
        LayerRef head;
        std::vector<LayerRef> dec; // dec[l] pairs with enc[l]
        LayerRef out;
    };

    struct SampleCache {
        layers::FeatureMap input;
        std::vector<layers::FeatureMap> enc_in;
        std::vector<layers::FeatureMap> enc_out;
        std::vector<std::vector<std::size_t>> pool_index;
        layers::FeatureMap bottleneck;
        std::vector<double> features;
        std::vector<std::vector<double>> hidden;
        double prob = 0.0;
        std::vector<layers::FeatureMap> dec_in; // concatenated [upsampled, skip]
        std::vector<layers::FeatureMap> dec_out;
        layers::FeatureMap reconstruction;
    };

    struct Tape {
        std::vector<SampleCache> samples;
        std::uint64_t fingerprint = 0;
        std::uint64_t version = 0;
        bool valid = false;
    };

    std::size_t add_block(std::string name, Shape shape) {
        const std::size_t size = shape_size(shape);
        params_.push_back({std::move(name), std::move(shape), std::vector<double>(size, 0.0)});
        return params_.size() - 1;
    }

    LayerRef add_conv(const std::string& name, std::size_t cin, std::size_t cout) {
        LayerRef r;
        r.weight = add_block(name + ".weight", {cout, 3, 3, cin});
        r.bias = add_block(name + ".bias", {cout});
        r.out = cout;
        return r;
    }

    LayerRef add_dense(const std::string& name, std::size_t in, std::size_t out) {
        LayerRef r;
        r.weight = add_block(name + ".weight", {out, in});
        r.bias = add_block(name + ".bias", {out});
        r.out = out;
        return r;
    }

    void build() {
        const auto& ch = config_.channels_per_level;
        const std::size_t levels = config_.encoder_levels;

        std::size_t cin = config_.input_channels;
        for (std::size_t l = 0; l < levels; ++l) {
            layout_.enc.push_back(add_conv("enc" + std::to_string(l + 1), cin, ch[l]));
            cin = ch[l];
        }

        std::size_t width = config_.bottleneck_features() + config_.clinical_dim;
        for (std::size_t j = 0; j < config_.dense_widths.size(); ++j) {
            layout_.dense.push_back(add_dense("dense" + std::to_string(j + 1), width, config_.dense_widths[j]));
            width = config_.dense_widths[j];
        }
        layout_.head = add_dense("head", width, 1);

        layout_.dec.resize(levels);
        std::size_t dec_channels = ch.back();
        for (std::size_t l = levels; l-- > 0;) {
            const std::size_t concat = dec_channels + ch[l];
            layout_.dec[l] = add_conv("dec" + std::to_string(l + 1), concat, ch[l]);
            // skip-connection contract: decoder input = upsampled channels + encoder channels
            if (params_[layout_.dec[l].weight].shape[3] != dec_channels + ch[l]) {
                throw Error(Errc::InvalidConfig, "skip concatenation channel mismatch");
            }
            dec_channels = ch[l];
        }
        layout_.out = add_conv("out", dec_channels, config_.input_channels);
    }

    // He-uniform weights in build order, zero biases.
    void initialize() {
        std::mt19937_64 rng(config_.seed);
        for (auto& block : params_) {
            if (block.shape.size() == 1) continue;
            const std::size_t fan_in = block.values.size() / block.shape[0];
            const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
            std::uniform_real_distribution<double> dist(-limit, limit);
            for (double& w : block.values) w = dist(rng);
        }
    }

    std::span<const double> p(std::size_t i) const { return params_[i].values; }

    std::size_t check_inputs(const Tensor& volumes, const Tensor& clinical) const {
        const Shape in = input_shape();
        std::size_t n = 0;
        if (volumes.shape() == in) {
            n = 1;
        } else if (volumes.rank() == 4 && Shape(volumes.shape().begin() + 1, volumes.shape().end()) == in) {
            n = volumes.dim(0);
        } else {
            throw Error(Errc::ShapeMismatch, "volume shape " + shape_to_string(volumes.shape()) +
                                                 " does not match model input " + shape_to_string(in));
        }
        if (config_.clinical_dim == 0) {
            if (!clinical.empty()) throw Error(Errc::ShapeMismatch, "model takes no clinical input");
        } else if (clinical.size() != n * config_.clinical_dim) {
            throw Error(Errc::ShapeMismatch, "clinical input must have " + std::to_string(config_.clinical_dim) +
                                                 " values per item");
        }
        return n;
    }

    std::size_t check_batch(const Batch& batch) const {
        const std::size_t n = check_inputs(batch.volumes, batch.clinical);
        if (n != batch.labels.size()) throw Error(Errc::ShapeMismatch, "labels do not match batch size");
        return n;
    }

    std::span<const double> volume_item(const Tensor& volumes, std::size_t i) const {
        const std::size_t vol = shape_size(input_shape());
        return volumes.data().subspan(i * vol, vol);
    }

    std::span<const double> clinical_item(const Tensor& clinical, std::size_t i) const {
        if (config_.clinical_dim == 0) return {};
        return clinical.data().subspan(i * config_.clinical_dim, config_.clinical_dim);
    }

    void run_sample(std::span<const double> volume, std::span<const double> clinical, SampleCache& c) const {
        using namespace layers;
        const std::size_t levels = config_.encoder_levels;
        c.input = FeatureMap(config_.input_height, config_.input_width, config_.input_channels,
                             std::vector<double>(volume.begin(), volume.end()));
        c.enc_in.clear();
        c.enc_out.resize(levels);
        c.pool_index.resize(levels);

        const FeatureMap* cur = &c.input;
        FeatureMap pooled;
        for (std::size_t l = 0; l < levels; ++l) {
            const auto& e = layout_.enc[l];
            c.enc_out[l] = conv3x3_forward(*cur, p(e.weight), p(e.bias), e.out);
            relu_forward(c.enc_out[l].values);
            pooled = maxpool2_forward(c.enc_out[l], c.pool_index[l]);
            if (l + 1 < levels) {
                c.enc_in.push_back(std::move(pooled));
                cur = &c.enc_in.back();
            }
        }
        c.bottleneck = std::move(pooled);

        // prediction branch
        c.features = c.bottleneck.values;
        c.features.insert(c.features.end(), clinical.begin(), clinical.end());
        c.hidden.clear();
        std::span<const double> h = c.features;
        for (const auto& d : layout_.dense) {
            c.hidden.push_back(dense_forward(h, p(d.weight), p(d.bias)));
            relu_forward(c.hidden.back());
            h = c.hidden.back();
        }
        const double logit = dense_forward(h, p(layout_.head.weight), p(layout_.head.bias))[0];
        c.prob = sigmoid(logit);

        // reconstruction branch
        c.dec_in.assign(levels, {});
        c.dec_out.assign(levels, {});
        const FeatureMap* below = &c.bottleneck;
        for (std::size_t l = levels; l-- > 0;) {
            const auto& d = layout_.dec[l];
            c.dec_in[l] = concat_channels(upsample2_forward(*below), c.enc_out[l]);
            c.dec_out[l] = conv3x3_forward(c.dec_in[l], p(d.weight), p(d.bias), d.out);
            relu_forward(c.dec_out[l].values);
            below = &c.dec_out[l];
        }
        c.reconstruction = conv3x3_forward(*below, p(layout_.out.weight), p(layout_.out.bias), layout_.out.out);
    }

    void backward_sample(const SampleCache& c, const layers::FeatureMap& drec, double dlogit, Gradients& g) const {
        using namespace layers;
        const std::size_t levels = config_.encoder_levels;
        auto gb = [&](std::size_t i) { return std::span<double>(g.blocks[i]); };

        std::vector<FeatureMap> d_enc_out(levels);
        for (std::size_t l = 0; l < levels; ++l) {
            d_enc_out[l] = FeatureMap(c.enc_out[l].height, c.enc_out[l].width, c.enc_out[l].channels);
        }

        // reconstruction branch
        FeatureMap d_cur = conv3x3_backward(c.dec_out[0], p(layout_.out.weight), drec, gb(layout_.out.weight),
                                            gb(layout_.out.bias));
        for (std::size_t l = 0; l < levels; ++l) {
            const auto& d = layout_.dec[l];
            relu_backward(c.dec_out[l].values, d_cur.values);
            FeatureMap d_in = conv3x3_backward(c.dec_in[l], p(d.weight), d_cur, gb(d.weight), gb(d.bias));
            const std::size_t up_channels = c.dec_in[l].channels - c.enc_out[l].channels;
            auto [d_up, d_skip] = split_channels(d_in, up_channels);
            for (std::size_t j = 0; j < d_skip.values.size(); ++j) d_enc_out[l].values[j] += d_skip.values[j];
            d_cur = upsample2_backward(d_up);
        }
        FeatureMap d_bottleneck = std::move(d_cur);

        // prediction branch
        std::vector<double> dh{dlogit};
        std::span<const double> h_in = c.hidden.empty() ? std::span<const double>(c.features) : c.hidden.back();
        dh = dense_backward(h_in, p(layout_.head.weight), dh, gb(layout_.head.weight), gb(layout_.head.bias));
        for (std::size_t j = layout_.dense.size(); j-- > 0;) {
            const auto& d = layout_.dense[j];
            relu_backward(c.hidden[j], dh);
            std::span<const double> in = j == 0 ? std::span<const double>(c.features) : c.hidden[j - 1];
            dh = dense_backward(in, p(d.weight), dh, gb(d.weight), gb(d.bias));
        }
        for (std::size_t j = 0; j < d_bottleneck.values.size(); ++j) d_bottleneck.values[j] += dh[j];

        // encoder
        FeatureMap d_pooled = std::move(d_bottleneck);
        for (std::size_t l = levels; l-- > 0;) {
            const auto& e = layout_.enc[l];
            FeatureMap d_out = maxpool2_backward(d_pooled, c.pool_index[l]);
            for (std::size_t j = 0; j < d_out.values.size(); ++j) d_out.values[j] += d_enc_out[l].values[j];
            relu_backward(c.enc_out[l].values, d_out.values);
            const FeatureMap& in = l == 0 ? c.input : c.enc_in[l - 1];
            d_pooled = conv3x3_backward(in, p(e.weight), d_out, gb(e.weight), gb(e.bias), l > 0);
        }
    }

    static std::uint64_t fingerprint(const Batch& batch) {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&h](std::span<const double> data) {
            for (double v : data) {
                h ^= std::bit_cast<std::uint64_t>(v);
                h *= 1099511628211ull;
            }
        };
        mix(batch.volumes.data());
        mix(batch.clinical.data());
        for (auto l : batch.labels) {
            h ^= l;
            h *= 1099511628211ull;
        }
        return h;
    }

    ModelConfig config_;
    std::vector<ParamBlock> params_;
    Layout layout_;
    Tape tape_;
    std::uint64_t version_ = 0;
};

inline Model build_model(const ModelConfig& config) { return Model(config); }

inline MultitaskOutput forward(const Model& model, const Tensor& volume, const Tensor& clinical) {
    return model.forward(volume, clinical);
}

/// Records a forward pass of `batch` and returns the total-loss gradient.
inline Gradients backward(Model& model, const Batch& batch, const Alpha& alpha, LossWeights weights = {}) {
    model.record_forward(batch);
    return model.backward(batch, alpha, weights);
}

struct GradientCheckReport {
    struct Block {
        std::string name;
        double max_relative_error = 0.0;
    };
    std::vector<Block> blocks;
    double max_relative_error = 0.0;
    double threshold = 1e-4;
    bool pass = false;
};

/// |a - b| / max(|a|, |b|, floor); the floor keeps round-off on vanishing gradients from dominating.
inline double relative_error(double analytic, double numeric, double floor = 1e-7) noexcept {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

using AnalyticGradientFn = std::function<Gradients(Model&, const Batch&, const Alpha&, LossWeights)>;

/// Central differences (step `step`) on every parameter against the analytic gradient.
inline GradientCheckReport gradient_check(Model& model, const Batch& batch, const Alpha& alpha,
                                          LossWeights weights = {}, AnalyticGradientFn analytic = {},
                                          double step = 1e-4, double threshold = 1e-4) {
    if (!analytic) analytic = [](Model& m, const Batch& b, const Alpha& a, LossWeights w) {
        return backward(m, b, a, w);
    };
    const Gradients grads = analytic(model, batch, alpha, weights);

    GradientCheckReport report;
    report.threshold = threshold;
    auto& params = model.mutable_params();
    for (std::size_t bi = 0; bi < params.size(); ++bi) {
        GradientCheckReport::Block entry{params[bi].name, 0.0};
        auto& values = params[bi].values;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + step;
            const double up = model.batch_loss(batch, alpha, weights).total;
            values[i] = saved - step;
            const double down = model.batch_loss(batch, alpha, weights).total;
            values[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            entry.max_relative_error = std::max(entry.max_relative_error, relative_error(grads.blocks[bi][i], numeric));
        }
        report.max_relative_error = std::max(report.max_relative_error, entry.max_relative_error);
        report.blocks.push_back(std::move(entry));
    }
    report.pass = report.max_relative_error < threshold;
    return report;
}

// Checkpoint: "THCM", u16 version, ModelConfig, then every parameter block as f64 in build order.
inline constexpr std::uint16_t kCheckpointVersion = 1;

inline void save_checkpoint(const Model& model, const std::filesystem::path& path) {
    auto out = binio::open_output(path);
    out.write("THCM", 4);
    binio::write_le<std::uint16_t>(out, kCheckpointVersion);
    const auto& c = model.config();
    binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.input_height));
    binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.input_width));
    binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.input_channels));
    binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.encoder_levels));
    for (auto ch : c.channels_per_level) binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ch));
    binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.clinical_dim));
    binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.dense_widths.size()));
    for (auto w : c.dense_widths) binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(w));
    binio::write_le<std::uint64_t>(out, c.seed);
    for (const auto& block : model.params())
        for (double v : block.values) binio::write_f64(out, v);
    if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

inline Model load_checkpoint(const std::filesystem::path& path) {
    auto in = binio::open_input(path);
    binio::expect_magic(in, "THCM");
    const auto version = binio::read_le<std::uint16_t>(in);
    if (version != kCheckpointVersion) {
        throw Error(Errc::VersionMismatch, "checkpoint version " + std::to_string(version));
    }
    ModelConfig c;
    c.input_height = binio::read_le<std::uint32_t>(in);
    c.input_width = binio::read_le<std::uint32_t>(in);
    c.input_channels = binio::read_le<std::uint32_t>(in);
    c.encoder_levels = binio::read_le<std::uint32_t>(in);
    if (c.encoder_levels > 30) throw Error(Errc::InvalidConfig, "corrupt checkpoint header");
    c.channels_per_level.resize(c.encoder_levels);
    for (auto& ch : c.channels_per_level) ch = binio::read_le<std::uint32_t>(in);
    c.clinical_dim = binio::read_le<std::uint32_t>(in);
    const auto n_dense = binio::read_le<std::uint32_t>(in);
    if (n_dense > 1024) throw Error(Errc::InvalidConfig, "corrupt checkpoint header");
    c.dense_widths.resize(n_dense);
    for (auto& w : c.dense_widths) w = binio::read_le<std::uint32_t>(in);
    c.seed = binio::read_le<std::uint64_t>(in);

    Model model(c);
    for (auto& block : model.mutable_params())
        for (double& v : block.values) v = binio::read_f64(in);
    binio::expect_eof(in);
    return model;
}

} // namespace thc
