#pragma once

// Shannon and Tsallis-Havrda-Charvat (THC) entropies, cross-entropies and the
// binary losses built from them. Natural logarithm throughout; all arithmetic
// in double regardless of the caller's precision.
//
// The THC forms are evaluated as  (1 - u^(a-1)) / (a-1) = -expm1((a-1) ln u) / (a-1)
// so they stay accurate arbitrarily close to the Shannon limit a -> 1.

#include "thc/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace thc {

inline constexpr double kSimplexTolerance = 1e-9;
inline constexpr double kShannonLimitTolerance = 1e-6;
inline constexpr double kDefaultClampEpsilon = 1e-7;

/// The THC order. `is_shannon_limit()` selects the Shannon formulas.
class Alpha {
public:
    explicit Alpha(double value) : value_(value) {
        if (!(value > 0.0) || !std::isfinite(value)) {
            throw Error(Errc::DomainError, "alpha must be a finite value > 0, got " + std::to_string(value));
        }
    }

    double value() const noexcept { return value_; }
    bool is_shannon_limit() const noexcept { return std::abs(value_ - 1.0) < kShannonLimitTolerance; }

    friend bool operator==(const Alpha&, const Alpha&) = default;

private:
    double value_;
};

/// A point on the probability simplex.
class ProbabilityVector {
public:
    explicit ProbabilityVector(std::vector<double> values) : values_(std::move(values)) { validate(); }
    ProbabilityVector(std::initializer_list<double> values) : values_(values) { validate(); }

    static ProbabilityVector uniform(std::size_t k) {
        return ProbabilityVector(std::vector<double>(k, 1.0 / static_cast<double>(k)));
    }

    static ProbabilityVector dirac(std::size_t k, std::size_t index) {
        std::vector<double> v(k, 0.0);
        v.at(index) = 1.0;
        return ProbabilityVector(std::move(v));
    }

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }

private:
    void validate() const {
        if (values_.empty()) {
            throw Error(Errc::InvalidSimplex, "probability vector must have at least one element");
        }
        double sum = 0.0;
        for (double v : values_) {
            if (!(v >= 0.0 && v <= 1.0)) {
                throw Error(Errc::InvalidSimplex, "element outside [0,1]: " + std::to_string(v));
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > kSimplexTolerance) {
            throw Error(Errc::InvalidSimplex, "elements sum to " + std::to_string(sum));
        }
    }

    std::vector<double> values_;
};

/// Labels p_n in {0,1} and predicted recurrence probabilities q_n.
class BinaryBatch {
public:
    BinaryBatch(std::vector<std::uint8_t> labels, std::vector<double> probs)
        : labels_(std::move(labels)), probs_(std::move(probs)) {
        if (labels_.size() != probs_.size()) {
            throw Error(Errc::DimensionMismatch, "labels and probs differ in length");
        }
        for (auto l : labels_) {
            if (l > 1) throw Error(Errc::DomainError, "label must be 0 or 1");
        }
        for (double q : probs_) {
            if (!(q >= 0.0 && q <= 1.0)) {
                throw Error(Errc::DomainError, "probability outside [0,1]: " + std::to_string(q));
            }
        }
    }

    std::size_t size() const noexcept { return labels_.size(); }
    bool empty() const noexcept { return labels_.empty(); }
    std::span<const std::uint8_t> labels() const noexcept { return labels_; }
    std::span<const double> probs() const noexcept { return probs_; }

private:
    std::vector<std::uint8_t> labels_;
    std::vector<double> probs_;
};

/// Non-negative loss in nats. Construction rejects NaN and infinities.
struct LossValue {
    double value = 0.0;

    LossValue() = default;
    explicit LossValue(double v) : value(v) {
        if (!std::isfinite(v)) throw Error(Errc::NonFiniteLoss, "loss is not finite");
    }
    operator double() const noexcept { return value; }
};

inline double clamp_probability(double q, double epsilon = kDefaultClampEpsilon) noexcept {
    return std::min(std::max(q, epsilon), 1.0 - epsilon);
}

namespace detail {

inline void require_same_length(const ProbabilityVector& q, const ProbabilityVector& p) {
    if (q.size() != p.size()) {
        throw Error(Errc::DimensionMismatch,
                    "lengths " + std::to_string(q.size()) + " and " + std::to_string(p.size()));
    }
}

// (1 - u^(a-1)) / (a-1); the expm1 form keeps precision as a -> 1. u = 0 is
// only reached with a > 1, where u^(a-1) = 0.
inline double thc_term(double u, double alpha) noexcept {
    const double am1 = alpha - 1.0;
    if (u == 0.0) return 1.0 / am1;
    return -std::expm1(am1 * std::log(u)) / am1;
}

inline void require_nonempty(const BinaryBatch& batch) {
    if (batch.empty()) throw Error(Errc::EmptyBatch, "batch has no items");
}

} // namespace detail

inline LossValue shannon_entropy(const ProbabilityVector& p) {
    double h = 0.0;
    for (double v : p.values()) {
        if (v > 0.0) h -= v * std::log(v);
    }
    return LossValue(std::max(h, 0.0));
}

inline LossValue shannon_cross_entropy(const ProbabilityVector& q, const ProbabilityVector& p) {
    detail::require_same_length(q, p);
    double h = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (p[i] > 0.0) h -= std::log(clamp_probability(q[i])) * p[i];
    }
    return LossValue(h);
}

/// Entropy generator (u^a - u)/(a - 1); u log u in the Shannon limit.
inline double h_alpha(double u, const Alpha& alpha) {
    if (!(u >= 0.0 && u <= 1.0)) {
        throw Error(Errc::DomainError, "generator argument outside [0,1]: " + std::to_string(u));
    }
    if (u == 0.0 || u == 1.0) return 0.0;
    if (alpha.is_shannon_limit()) return u * std::log(u);
    const double am1 = alpha.value() - 1.0;
    return u * std::expm1(am1 * std::log(u)) / am1;
}

inline LossValue thc_entropy(const ProbabilityVector& q, const Alpha& alpha) {
    if (alpha.is_shannon_limit()) return shannon_entropy(q);
    double h = 0.0;
    for (double v : q.values()) h -= h_alpha(v, alpha);
    return LossValue(std::max(h, 0.0));
}

inline LossValue thc_cross_entropy(const ProbabilityVector& q, const ProbabilityVector& p, const Alpha& alpha) {
    if (alpha.is_shannon_limit()) return shannon_cross_entropy(q, p);
    detail::require_same_length(q, p);
    const double a = alpha.value();
    double h = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (p[i] == 0.0) continue;
        // q^(a-1) diverges at 0 only for a < 1
        const double qi = a < 1.0 ? clamp_probability(q[i]) : q[i];
        h += p[i] * detail::thc_term(qi, a);
    }
    return LossValue(h);
}

inline LossValue binary_shannon_loss(const BinaryBatch& batch) {
    detail::require_nonempty(batch);
    const auto labels = batch.labels();
    const auto probs = batch.probs();
    double sum = 0.0;
    for (std::size_t n = 0; n < batch.size(); ++n) {
        const double q = clamp_probability(probs[n]);
        sum += labels[n] ? std::log(q) : std::log1p(-q);
    }
    return LossValue(-sum / static_cast<double>(batch.size()));
}

inline LossValue binary_thc_loss(const BinaryBatch& batch, const Alpha& alpha) {
    if (alpha.is_shannon_limit()) return binary_shannon_loss(batch);
    detail::require_nonempty(batch);
    const auto labels = batch.labels();
    const auto probs = batch.probs();
    const double a = alpha.value();
    double sum = 0.0;
    for (std::size_t n = 0; n < batch.size(); ++n) {
        const double q = clamp_probability(probs[n]);
        sum += detail::thc_term(labels[n] ? q : 1.0 - q, a);
    }
    return LossValue(sum / static_cast<double>(batch.size()));
}

/// dL/dq_n of binary_thc_loss, evaluated at the clamped probabilities.
inline std::vector<double> binary_thc_loss_grad(const BinaryBatch& batch, const Alpha& alpha) {
    detail::require_nonempty(batch);
    const auto labels = batch.labels();
    const auto probs = batch.probs();
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    const double a = alpha.value();
    const bool shannon = alpha.is_shannon_limit();

    std::vector<double> grad(batch.size());
    for (std::size_t n = 0; n < batch.size(); ++n) {
        const double q = clamp_probability(probs[n]);
        const double p = labels[n];
        if (shannon) {
            grad[n] = -inv_n * (p / q - (1.0 - p) / (1.0 - q));
        } else {
            // only the active label's term contributes; avoids 0 * inf
            grad[n] = labels[n] ? -inv_n * std::pow(q, a - 2.0) : inv_n * std::pow(1.0 - q, a - 2.0);
        }
    }
    return grad;
}

} // namespace thc
