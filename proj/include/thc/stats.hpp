#pragma once

#include "thc/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace thc {

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};

inline double mean(std::span<const double> v) {
    if (v.empty()) throw Error(Errc::EmptyInput, "mean of empty sample");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Arithmetic mean and sample SD (n - 1 denominator).
inline MeanSd mean_sd(std::span<const double> v) {
    if (v.size() < 2) throw Error(Errc::InsufficientData, "sample SD needs at least 2 values");
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

namespace detail {

inline constexpr double kBetaTolerance = 1e-10;
inline constexpr int kBetaMaxIterations = 500;

// Modified Lentz evaluation of the incomplete-beta continued fraction.
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kBetaMaxIterations; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kBetaTolerance) return h;
    }
    return h;
}

} // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw Error(Errc::DomainError, "incomplete_beta needs a, b > 0");
    if (!(x >= 0.0 && x <= 1.0)) throw Error(Errc::DomainError, "incomplete_beta needs x in [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double front =
        std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// Student t CDF with (possibly fractional) degrees of freedom.
inline double student_t_cdf(double t, double df) {
    if (!(df > 0.0)) throw Error(Errc::DomainError, "df must be > 0");
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
    return t > 0 ? 1.0 - tail : tail;
}

/// P(|T| >= |t|).
inline double two_sided_t_pvalue(double t, double df) {
    if (std::isinf(t)) return 0.0;
    return std::clamp(incomplete_beta(0.5 * df, 0.5, df / (df + t * t)), 0.0, 1.0);
}

enum class TestKind { Welch, Student, Paired };

inline std::string_view to_string(TestKind k) noexcept {
    switch (k) {
    case TestKind::Welch: return "welch";
    case TestKind::Student: return "student";
    case TestKind::Paired: return "paired";
    }
    return "?";
}

inline TestKind parse_test_kind(std::string_view s) {
    if (s == "welch") return TestKind::Welch;
    if (s == "student") return TestKind::Student;
    if (s == "paired") return TestKind::Paired;
    throw Error(Errc::InvalidConfig, "unknown test kind: " + std::string(s));
}

namespace detail {

inline bool is_constant(std::span<const double> v) noexcept {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

// Both variance terms zero: identical constants -> p = 1, otherwise p = 0.
inline double degenerate_pvalue(double diff) { return diff == 0.0 ? 1.0 : 0.0; }

} // namespace detail

/// Two-sided p-value of a two-sample t-test (Welch by default).
inline double significance_test(std::span<const double> a, std::span<const double> b,
                                TestKind kind = TestKind::Welch) {
    if (a.size() < 2 || b.size() < 2) throw Error(Errc::InsufficientData, "t-test needs >= 2 values per sample");
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());

    if (kind == TestKind::Paired) {
        if (a.size() != b.size()) throw Error(Errc::DimensionMismatch, "paired test needs equal lengths");
        std::vector<double> d(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
        const auto [m, sd] = mean_sd(d);
        if (detail::is_constant(d)) return detail::degenerate_pvalue(d.front());
        return two_sided_t_pvalue(m / (sd / std::sqrt(na)), na - 1.0);
    }

    const auto sa = mean_sd(a), sb = mean_sd(b);
    const double diff = sa.mean - sb.mean;
    const bool ca = detail::is_constant(a), cb = detail::is_constant(b);
    if (ca && cb) return detail::degenerate_pvalue(a.front() - b.front());
    const double va = ca ? 0.0 : sa.sd * sa.sd, vb = cb ? 0.0 : sb.sd * sb.sd;

    if (kind == TestKind::Student) {
        const double df = na + nb - 2.0;
        const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
        return two_sided_t_pvalue(diff / std::sqrt(pooled * (1.0 / na + 1.0 / nb)), df);
    }

    const double ea = va / na, eb = vb / nb;
    const double se2 = ea + eb;
    const double df = se2 * se2 / (ea * ea / (na - 1.0) + eb * eb / (nb - 1.0));
    return two_sided_t_pvalue(diff / std::sqrt(se2), df);
}

} // namespace thc
