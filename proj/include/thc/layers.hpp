#pragma once

// Per-sample forward/backward kernels for the network's layer types. Feature
// maps are H x W x C, row-major, channel fastest. Backward functions
// accumulate into parameter gradients and return the input gradient.

#include "thc/error.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace thc::layers {

struct FeatureMap {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
    std::vector<double> values;

    FeatureMap() = default;
    FeatureMap(std::size_t h, std::size_t w, std::size_t c)
        : height(h), width(w), channels(c), values(h * w * c, 0.0) {}
    FeatureMap(std::size_t h, std::size_t w, std::size_t c, std::vector<double> v)
        : height(h), width(w), channels(c), values(std::move(v)) {
        if (values.size() != h * w * c) throw Error(Errc::ShapeMismatch, "feature map size mismatch");
    }

    double* pixel(std::size_t y, std::size_t x) noexcept { return values.data() + (y * width + x) * channels; }
    const double* pixel(std::size_t y, std::size_t x) const noexcept {
        return values.data() + (y * width + x) * channels;
    }
};

inline constexpr std::size_t kKernel = 3;

inline std::size_t conv3x3_weight_count(std::size_t in_channels, std::size_t out_channels) noexcept {
    return out_channels * kKernel * kKernel * in_channels;
}

/// 3x3 convolution, stride 1, zero same-padding. Weight layout (Cout, 3, 3, Cin).
inline FeatureMap conv3x3_forward(const FeatureMap& in, std::span<const double> weight,
                                  std::span<const double> bias, std::size_t out_channels) {
    const std::size_t cin = in.channels;
    if (weight.size() != conv3x3_weight_count(cin, out_channels) || bias.size() != out_channels) {
        throw Error(Errc::ShapeMismatch, "conv3x3 parameter size mismatch");
    }
    FeatureMap out(in.height, in.width, out_channels);
    const auto h = static_cast<std::ptrdiff_t>(in.height);
    const auto w = static_cast<std::ptrdiff_t>(in.width);
    for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            double* o = out.pixel(y, x);
            for (std::size_t co = 0; co < out_channels; ++co) o[co] = bias[co];
            for (std::ptrdiff_t ky = 0; ky < 3; ++ky) {
                const std::ptrdiff_t iy = y + ky - 1;
                if (iy < 0 || iy >= h) continue;
                for (std::ptrdiff_t kx = 0; kx < 3; ++kx) {
                    const std::ptrdiff_t ix = x + kx - 1;
                    if (ix < 0 || ix >= w) continue;
                    const double* src = in.pixel(iy, ix);
                    const std::size_t tap = static_cast<std::size_t>(ky * 3 + kx);
                    for (std::size_t co = 0; co < out_channels; ++co) {
                        const double* wrow = weight.data() + (co * 9 + tap) * cin;
                        double acc = 0.0;
                        for (std::size_t ci = 0; ci < cin; ++ci) acc += wrow[ci] * src[ci];
                        o[co] += acc;
                    }
                }
            }
        }
    }
    return out;
}

/// Returns d(input). Pass `need_input_grad = false` for the first layer.
inline FeatureMap conv3x3_backward(const FeatureMap& in, std::span<const double> weight, const FeatureMap& dout,
                                   std::span<double> dweight, std::span<double> dbias,
                                   bool need_input_grad = true) {
    const std::size_t cin = in.channels;
    const std::size_t cout = dout.channels;
    FeatureMap din;
    if (need_input_grad) din = FeatureMap(in.height, in.width, cin);
    const auto h = static_cast<std::ptrdiff_t>(in.height);
    const auto w = static_cast<std::ptrdiff_t>(in.width);
    for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            const double* g = dout.pixel(y, x);
            for (std::size_t co = 0; co < cout; ++co) dbias[co] += g[co];
            for (std::ptrdiff_t ky = 0; ky < 3; ++ky) {
                const std::ptrdiff_t iy = y + ky - 1;
                if (iy < 0 || iy >= h) continue;
                for (std::ptrdiff_t kx = 0; kx < 3; ++kx) {
                    const std::ptrdiff_t ix = x + kx - 1;
                    if (ix < 0 || ix >= w) continue;
                    const double* src = in.pixel(iy, ix);
                    double* dsrc = need_input_grad ? din.pixel(iy, ix) : nullptr;
                    const std::size_t tap = static_cast<std::size_t>(ky * 3 + kx);
                    for (std::size_t co = 0; co < cout; ++co) {
                        const double gc = g[co];
                        if (gc == 0.0) continue;
                        const std::size_t off = (co * 9 + tap) * cin;
                        double* dw = dweight.data() + off;
                        for (std::size_t ci = 0; ci < cin; ++ci) dw[ci] += gc * src[ci];
                        if (dsrc) {
                            const double* wrow = weight.data() + off;
                            for (std::size_t ci = 0; ci < cin; ++ci) dsrc[ci] += gc * wrow[ci];
                        }
                    }
                }
            }
        }
    }
    return din;
}

inline void relu_forward(std::span<double> v) noexcept {
    for (double& x : v)
        if (x < 0.0) x = 0.0; // NaN passes through
}

/// Masks `grad` in place using the ReLU *output*; derivative at 0 is taken as 0.
inline void relu_backward(std::span<const double> output, std::span<double> grad) noexcept {
    for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!(output[i] > 0.0)) grad[i] = 0.0;
    }
}

/// 2x2 max-pool, stride 2. `argmax` receives the flat input index of each output.
inline FeatureMap maxpool2_forward(const FeatureMap& in, std::vector<std::size_t>& argmax) {
    if (in.height % 2 != 0 || in.width % 2 != 0) throw Error(Errc::ShapeMismatch, "maxpool2 needs even H and W");
    FeatureMap out(in.height / 2, in.width / 2, in.channels);
    argmax.assign(out.values.size(), 0);
    const std::size_t c = in.channels;
    for (std::size_t y = 0; y < out.height; ++y) {
        for (std::size_t x = 0; x < out.width; ++x) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                std::size_t best = ((2 * y) * in.width + 2 * x) * c + ch;
                for (std::size_t dy = 0; dy < 2; ++dy) {
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        const std::size_t idx = ((2 * y + dy) * in.width + 2 * x + dx) * c + ch;
                        if (in.values[idx] > in.values[best]) best = idx;
                    }
                }
                const std::size_t o = (y * out.width + x) * c + ch;
                out.values[o] = in.values[best];
                argmax[o] = best;
            }
        }
    }
    return out;
}

inline FeatureMap maxpool2_backward(const FeatureMap& dout, const std::vector<std::size_t>& argmax) {
    FeatureMap din(dout.height * 2, dout.width * 2, dout.channels);
    for (std::size_t o = 0; o < dout.values.size(); ++o) din.values[argmax[o]] += dout.values[o];
    return din;
}

/// Nearest-neighbour x2 upsampling.
inline FeatureMap upsample2_forward(const FeatureMap& in) {
    FeatureMap out(in.height * 2, in.width * 2, in.channels);
    for (std::size_t y = 0; y < out.height; ++y) {
        for (std::size_t x = 0; x < out.width; ++x) {
            const double* src = in.pixel(y / 2, x / 2);
            double* dst = out.pixel(y, x);
            for (std::size_t ch = 0; ch < in.channels; ++ch) dst[ch] = src[ch];
        }
    }
    return out;
}

inline FeatureMap upsample2_backward(const FeatureMap& dout) {
    FeatureMap din(dout.height / 2, dout.width / 2, dout.channels);
    for (std::size_t y = 0; y < dout.height; ++y) {
        for (std::size_t x = 0; x < dout.width; ++x) {
            const double* src = dout.pixel(y, x);
            double* dst = din.pixel(y / 2, x / 2);
            for (std::size_t ch = 0; ch < dout.channels; ++ch) dst[ch] += src[ch];
        }
    }
    return din;
}

/// Channel-wise concatenation [a, b] at every pixel.
inline FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b) {
    if (a.height != b.height || a.width != b.width) throw Error(Errc::ShapeMismatch, "concat spatial mismatch");
    FeatureMap out(a.height, a.width, a.channels + b.channels);
    for (std::size_t p = 0; p < a.height * a.width; ++p) {
        double* dst = out.values.data() + p * out.channels;
        const double* pa = a.values.data() + p * a.channels;
        const double* pb = b.values.data() + p * b.channels;
        std::copy(pa, pa + a.channels, dst);
        std::copy(pb, pb + b.channels, dst + a.channels);
    }
    return out;
}

inline std::pair<FeatureMap, FeatureMap> split_channels(const FeatureMap& d, std::size_t first_channels) {
    const std::size_t second = d.channels - first_channels;
    FeatureMap a(d.height, d.width, first_channels);
    FeatureMap b(d.height, d.width, second);
    for (std::size_t p = 0; p < d.height * d.width; ++p) {
        const double* src = d.values.data() + p * d.channels;
        std::copy(src, src + first_channels, a.values.data() + p * first_channels);
        std::copy(src + first_channels, src + d.channels, b.values.data() + p * second);
    }
    return {std::move(a), std::move(b)};
}

/// Fully connected layer, weight layout (out, in).
inline std::vector<double> dense_forward(std::span<const double> in, std::span<const double> weight,
                                         std::span<const double> bias) {
    const std::size_t n_out = bias.size();
    if (weight.size() != n_out * in.size()) throw Error(Errc::ShapeMismatch, "dense parameter size mismatch");
    std::vector<double> out(n_out);
    for (std::size_t o = 0; o < n_out; ++o) {
        const double* wrow = weight.data() + o * in.size();
        double acc = bias[o];
        for (std::size_t i = 0; i < in.size(); ++i) acc += wrow[i] * in[i];
        out[o] = acc;
    }
    return out;
}

inline std::vector<double> dense_backward(std::span<const double> in, std::span<const double> weight,
                                          std::span<const double> dout, std::span<double> dweight,
                                          std::span<double> dbias) {
    std::vector<double> din(in.size(), 0.0);
    for (std::size_t o = 0; o < dout.size(); ++o) {
        const double g = dout[o];
        dbias[o] += g;
        if (g == 0.0) continue;
        const double* wrow = weight.data() + o * in.size();
        double* dw = dweight.data() + o * in.size();
        for (std::size_t i = 0; i < in.size(); ++i) {
            dw[i] += g * in[i];
            din[i] += g * wrow[i];
        }
    }
    return din;
}

inline double sigmoid(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

} // namespace thc::layers
