#pragma once

// Shared fixtures and independent oracles for the test suites.

#include "thc/error.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#define EXPECT_THC_ERROR(stmt, errc)                                                                   \
    do {                                                                                               \
        try {                                                                                          \
            stmt;                                                                                      \
            ADD_FAILURE() << "expected thc::Error(" << thc::to_string(errc) << ")";                    \
        } catch (const thc::Error& e) {                                                                \
            EXPECT_EQ(e.code(), errc) << e.what();                                                     \
        }                                                                                              \
    } while (0)

namespace thc::testing {

/// Uniform point on the k-simplex (normalised exponentials).
inline std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t k) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> v(k);
    double s = 0.0;
    for (double& x : v) s += (x = e(rng));
    for (double& x : v) x /= s;
    // renormalise the last coordinate so the sum is 1 to rounding
    double rest = 0.0;
    for (std::size_t i = 0; i + 1 < k; ++i) rest += v[i];
    v[k - 1] = std::max(0.0, 1.0 - rest);
    return v;
}

/// Uniform point on the simplex restricted to coordinates >= floor (rejection sampling).
inline std::vector<double> random_interior_simplex(std::mt19937_64& rng, std::size_t k, double floor) {
    for (;;) {
        auto v = random_simplex(rng, k);
        bool ok = true;
        for (double x : v) ok = ok && x >= floor;
        if (ok) return v;
    }
}

/// Central difference of a scalar function.
inline double central_difference(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

} // namespace thc::testing
