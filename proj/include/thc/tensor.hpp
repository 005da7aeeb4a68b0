#pragma once

#include "thc/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace thc {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) noexcept {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_to_string(const Shape& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

/// Dense row-major array of doubles. Image tensors use H x W x C (or N x H x W x C).
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape, double fill = 0.0) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
        check_shape();
    }

    Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
        check_shape();
        if (data_.size() != shape_size(shape_)) {
            throw Error(Errc::ShapeMismatch, "data length " + std::to_string(data_.size()) +
                                                 " does not match shape " + shape_to_string(shape_));
        }
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::vector<double>& storage() noexcept { return data_; }
    const std::vector<double>& storage() const noexcept { return data_; }

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    /// View of item `n` along the leading axis.
    std::span<const double> item(std::size_t n) const {
        const std::size_t stride = item_size();
        return std::span<const double>(data_).subspan(n * stride, stride);
    }
    std::span<double> item(std::size_t n) {
        const std::size_t stride = item_size();
        return std::span<double>(data_).subspan(n * stride, stride);
    }
    std::size_t item_size() const { return shape_.empty() ? 0 : data_.size() / shape_[0]; }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    void check_shape() const {
        for (auto d : shape_) {
            if (d == 0) throw Error(Errc::ShapeMismatch, "zero-length axis in shape " + shape_to_string(shape_));
        }
    }

    Shape shape_;
    std::vector<double> data_;
};

} // namespace thc
