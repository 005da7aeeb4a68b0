#include "thc/entropy.hpp"

#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace thc;
using thc::testing::random_interior_simplex;
using thc::testing::random_simplex;

namespace {

// Direct transcriptions of the definitions, no expm1 rewriting.
double naive_thc_entropy(const std::vector<double>& q, double a) {
    double s = 0.0;
    for (double v : q) s += std::pow(v, a);
    return (1.0 - s) / (a - 1.0);
}

double naive_thc_cross(const std::vector<double>& q, const std::vector<double>& p, double a) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) s += std::pow(q[i], a - 1.0) * p[i];
    return (1.0 - s) / (a - 1.0);
}

BinaryBatch make_batch(std::vector<std::uint8_t> labels, std::vector<double> probs) {
    return BinaryBatch(std::move(labels), std::move(probs));
}

} // namespace

TEST(ShannonEntropy, SpotValues) {
    EXPECT_EQ(shannon_entropy({1.0, 0.0}).value, 0.0);
    EXPECT_NEAR(shannon_entropy({0.5, 0.5}), 0.693147, 1e-6);
    EXPECT_NEAR(shannon_entropy({0.25, 0.25, 0.25, 0.25}), 1.386294, 1e-6);
}

TEST(ShannonEntropy, RejectsInvalidSimplex) {
    EXPECT_THC_ERROR(ProbabilityVector({0.5, 0.6}), Errc::InvalidSimplex);
    EXPECT_THC_ERROR(ProbabilityVector({1.5, -0.5}), Errc::InvalidSimplex);
    EXPECT_THC_ERROR(ProbabilityVector(std::vector<double>{}), Errc::InvalidSimplex);
}

TEST(ShannonCrossEntropy, SpotValues) {
    EXPECT_NEAR(shannon_cross_entropy({1.0, 0.0}, {1.0, 0.0}), 0.0, 1e-6);
    EXPECT_NEAR(shannon_cross_entropy({0.5, 0.5}, {1.0, 0.0}), 0.693147, 1e-6);
    EXPECT_NEAR(shannon_cross_entropy({0.9, 0.1}, {0.5, 0.5}), 1.203973, 1e-6);
}

TEST(ShannonCrossEntropy, DimensionMismatch) {
    EXPECT_THC_ERROR(shannon_cross_entropy({0.5, 0.5}, {1.0, 0.0, 0.0}), Errc::DimensionMismatch);
    EXPECT_THC_ERROR(thc_cross_entropy({0.5, 0.5}, {1.0, 0.0, 0.0}, Alpha(2.0)), Errc::DimensionMismatch);
}

TEST(Alpha, ValidatesAndFlagsShannonLimit) {
    EXPECT_THC_ERROR(Alpha(0.0), Errc::DomainError);
    EXPECT_THC_ERROR(Alpha(-1.0), Errc::DomainError);
    EXPECT_TRUE(Alpha(1.0).is_shannon_limit());
    EXPECT_TRUE(Alpha(1.0 + 5e-7).is_shannon_limit());
    EXPECT_FALSE(Alpha(1.0 + 2e-6).is_shannon_limit());
}

TEST(HAlpha, SpotValues) {
    for (double a : {0.1, 0.5, 1.0, 2.0, 3.9}) EXPECT_EQ(h_alpha(1.0, Alpha(a)), 0.0);
    EXPECT_DOUBLE_EQ(h_alpha(0.5, Alpha(2.0)), -0.25);
    EXPECT_NEAR(h_alpha(0.5, Alpha(1.0 + 1e-9)), -0.346574, 1e-5);
    EXPECT_THC_ERROR(h_alpha(1.5, Alpha(2.0)), Errc::DomainError);
    EXPECT_THC_ERROR(h_alpha(-0.1, Alpha(2.0)), Errc::DomainError);
}

TEST(HAlpha, ConvexOnGrid) {
    for (double a : {0.1, 0.5, 0.9, 1.0, 1.5, 2.0, 3.0, 3.9}) {
        const Alpha alpha(a);
        for (int i = 0; i <= 40; ++i) {
            for (int j = i + 1; j <= 40; ++j) {
                const double u = i / 40.0, v = j / 40.0;
                EXPECT_LE(h_alpha(0.5 * (u + v), alpha), 0.5 * (h_alpha(u, alpha) + h_alpha(v, alpha)) + 1e-12)
                    << "alpha=" << a << " u=" << u << " v=" << v;
            }
        }
    }
}

TEST(ThcEntropy, SpotValues) {
    for (double a : {0.3, 2.0, 3.0}) EXPECT_NEAR(thc_entropy({0.0, 1.0, 0.0}, Alpha(a)), 0.0, 1e-15);
    EXPECT_NEAR(thc_entropy({0.5, 0.5}, Alpha(2.0)), 0.5, 1e-12);
    EXPECT_NEAR(thc_entropy({0.5, 0.5}, Alpha(1.0 + 1e-7)), 0.693147, 1e-5);
    EXPECT_NEAR(thc_entropy({0.5, 0.5}, Alpha(1.0 - 1e-7)), 0.693147, 1e-5);
}

TEST(ThcEntropy, DegenerateSingleton) {
    for (double a : {0.5, 1.0, 2.0}) {
        EXPECT_EQ(thc_entropy({1.0}, Alpha(a)).value, 0.0);
        EXPECT_NEAR(thc_cross_entropy({1.0}, {1.0}, Alpha(a)), 0.0, 1e-6);
    }
    EXPECT_EQ(shannon_entropy({1.0}).value, 0.0);
}

TEST(ThcEntropy, MatchesDirectFormula) {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 300; ++t) {
        const std::size_t k = 2 + t % 7;
        const auto q = random_simplex(rng, k);
        for (double a : {0.2, 0.5, 1.5, 2.0, 3.0}) {
            EXPECT_NEAR(thc_entropy(ProbabilityVector(q), Alpha(a)), naive_thc_entropy(q, a), 1e-12);
        }
    }
}

TEST(ThcCrossEntropy, SpotValues) {
    EXPECT_EQ(thc_cross_entropy({1.0, 0.0}, {1.0, 0.0}, Alpha(3.0)).value, 0.0);
    EXPECT_NEAR(thc_cross_entropy({0.5, 0.5}, {1.0, 0.0}, Alpha(2.0)), 0.5, 1e-12);
    EXPECT_NEAR(thc_cross_entropy({0.8, 0.2}, {1.0, 0.0}, Alpha(3.0)), 0.18, 1e-12);
}

TEST(ThcCrossEntropy, MatchesDirectFormula) {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 300; ++t) {
        const std::size_t k = 2 + t % 7;
        const auto q = random_interior_simplex(rng, k, 1e-3);
        const auto p = random_simplex(rng, k);
        for (double a : {0.2, 0.5, 1.5, 2.0, 3.0}) {
            EXPECT_NEAR(thc_cross_entropy(ProbabilityVector(q), ProbabilityVector(p), Alpha(a)),
                        naive_thc_cross(q, p, a), 1e-10);
        }
    }
}

TEST(ThcCrossEntropy, NonNegativeAgainstDiracZeroOnlyAtTarget) {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 500; ++t) {
        const std::size_t k = 2 + t % 7;
        const auto q = random_simplex(rng, k);
        const auto p = ProbabilityVector::dirac(k, t % k);
        for (double a : {0.1, 0.5, 0.9, 1.0, 1.1, 2.0, 3.9}) {
            EXPECT_GE(thc_cross_entropy(ProbabilityVector(q), p, Alpha(a)).value, 0.0);
        }
    }
    for (double a : {0.1, 0.5, 1.0, 2.0, 3.9}) {
        EXPECT_LE(thc_cross_entropy({1.0, 0.0, 0.0}, ProbabilityVector::dirac(3, 0), Alpha(a)), 1e-6);
        EXPECT_GT(thc_cross_entropy({0.99, 0.01, 0.0}, ProbabilityVector::dirac(3, 0), Alpha(a)), 1e-4);
    }
}

TEST(EntropyProperties, NonNegativeEntropy) {
    std::mt19937_64 rng(14);
    for (int t = 0; t < 1000; ++t) {
        const auto q = ProbabilityVector(random_simplex(rng, 2 + t % 7));
        for (double a : {0.1, 0.5, 1.0, 1.5, 3.9}) EXPECT_GE(thc_entropy(q, Alpha(a)).value, 0.0);
    }
}

TEST(EntropyProperties, UniformIsMaximal) {
    std::mt19937_64 rng(15);
    for (std::size_t k = 2; k <= 8; ++k) {
        for (double a : {0.5, 2.0, 3.0}) {
            const double top = thc_entropy(ProbabilityVector::uniform(k), Alpha(a));
            for (int t = 0; t < 1000; ++t) {
                EXPECT_GE(top + 1e-12, thc_entropy(ProbabilityVector(random_simplex(rng, k)), Alpha(a)).value);
            }
        }
    }
}

TEST(EntropyProperties, ShannonLimitContinuity) {
    std::mt19937_64 rng(16);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t k = 2 + t % 7;
        const ProbabilityVector q(random_simplex(rng, k));
        const ProbabilityVector qi(random_interior_simplex(rng, k, 0.02));
        const ProbabilityVector p(random_simplex(rng, k));
        for (double a : {1.0 - 1e-4, 1.0 + 1e-4}) {
            EXPECT_LE(std::abs(thc_entropy(q, Alpha(a)) - shannon_entropy(q)), 1e-3);
            EXPECT_LE(std::abs(thc_cross_entropy(qi, p, Alpha(a)) - shannon_cross_entropy(qi, p)), 1e-3);
        }
    }
}

TEST(EntropyProperties, PermutationSymmetry) {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 200; ++t) {
        const std::size_t k = 2 + t % 7;
        auto q = random_interior_simplex(rng, k, 1e-3);
        auto p = random_simplex(rng, k);
        std::vector<std::size_t> perm(k);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<double> qp(k), pp(k);
        for (std::size_t i = 0; i < k; ++i) {
            qp[i] = q[perm[i]];
            pp[i] = p[perm[i]];
        }
        for (double a : {0.5, 1.0, 2.5}) {
            const Alpha alpha(a);
            EXPECT_NEAR(thc_entropy(ProbabilityVector(q), alpha), thc_entropy(ProbabilityVector(qp), alpha), 1e-12);
            EXPECT_NEAR(thc_cross_entropy(ProbabilityVector(q), ProbabilityVector(p), alpha),
                        thc_cross_entropy(ProbabilityVector(qp), ProbabilityVector(pp), alpha), 1e-12);
        }
    }
}

TEST(ClampProbability, SpotValues) {
    EXPECT_EQ(clamp_probability(0.5, 1e-7), 0.5);
    EXPECT_EQ(clamp_probability(0.0, 1e-7), 1e-7);
    EXPECT_EQ(clamp_probability(1.0, 1e-7), 1.0 - 1e-7);
}

TEST(BinaryShannonLoss, SpotValues) {
    EXPECT_LE(binary_shannon_loss(make_batch({1}, {1.0})), 1e-6);
    EXPECT_NEAR(binary_shannon_loss(make_batch({1}, {0.5})), 0.693147, 1e-6);
    EXPECT_NEAR(binary_shannon_loss(make_batch({0, 1}, {0.2, 0.8})), 0.223144, 1e-6);
    EXPECT_THC_ERROR(binary_shannon_loss(make_batch({}, {})), Errc::EmptyBatch);
}

TEST(BinaryThcLoss, SpotValues) {
    EXPECT_LE(binary_thc_loss(make_batch({1}, {1.0}), Alpha(2.0)), 1e-6);
    EXPECT_NEAR(binary_thc_loss(make_batch({1}, {0.5}), Alpha(2.0)), 0.5, 1e-12);
    EXPECT_NEAR(binary_thc_loss(make_batch({1, 0}, {0.5, 0.5}), Alpha(2.0)), 0.5, 1e-12);
    EXPECT_THC_ERROR(binary_thc_loss(make_batch({}, {}), Alpha(2.0)), Errc::EmptyBatch);
}

TEST(BinaryBatch, Validates) {
    EXPECT_THC_ERROR(make_batch({1, 0}, {0.5}), Errc::DimensionMismatch);
    EXPECT_THC_ERROR(make_batch({1}, {1.5}), Errc::DomainError);
    EXPECT_THC_ERROR(make_batch({2}, {0.5}), Errc::DomainError);
}

TEST(BinaryThcLoss, ShannonLimitContinuity) {
    std::mt19937_64 rng(18);
    std::uniform_real_distribution<double> prob(0.02, 0.98);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 1 + t % 16;
        std::vector<std::uint8_t> labels(n);
        std::vector<double> probs(n);
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = static_cast<std::uint8_t>(rng() & 1u);
            probs[i] = prob(rng);
        }
        const BinaryBatch batch(labels, probs);
        for (double a : {1.0 - 1e-4, 1.0 + 1e-4}) {
            EXPECT_LE(std::abs(binary_thc_loss(batch, Alpha(a)) - binary_shannon_loss(batch)), 1e-3);
        }
    }
}

TEST(BinaryThcLossGrad, SpotValues) {
    for (double q : {0.01, 0.3, 0.5, 0.99}) {
        const auto g = binary_thc_loss_grad(make_batch({1}, {q}), Alpha(2.0));
        ASSERT_EQ(g.size(), 1u);
        EXPECT_DOUBLE_EQ(g[0], -1.0);
    }
    EXPECT_DOUBLE_EQ(binary_thc_loss_grad(make_batch({0}, {0.5}), Alpha(3.0))[0], 0.5);
    EXPECT_THC_ERROR(binary_thc_loss_grad(make_batch({}, {}), Alpha(2.0)), Errc::EmptyBatch);
}

TEST(BinaryThcLossGrad, MatchesFiniteDifferences) {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> prob(0.01, 0.99);
    for (double a : {0.1, 0.5, 0.9, 1.0, 1.1, 1.5, 2.0, 3.0, 3.9}) {
        const Alpha alpha(a);
        for (int t = 0; t < 50; ++t) {
            const std::size_t n = 1 + t % 6;
            std::vector<std::uint8_t> labels(n);
            std::vector<double> probs(n);
            for (std::size_t i = 0; i < n; ++i) {
                labels[i] = static_cast<std::uint8_t>(rng() & 1u);
                probs[i] = prob(rng);
            }
            const auto grad = binary_thc_loss_grad(BinaryBatch(labels, probs), alpha);
            for (std::size_t i = 0; i < n; ++i) {
                auto f = [&](double x) {
                    auto shifted = probs;
                    shifted[i] = x;
                    return binary_thc_loss(BinaryBatch(labels, shifted), alpha).value;
                };
                const double numeric = thc::testing::central_difference(f, probs[i], 1e-5);
                EXPECT_LT(std::abs(grad[i] - numeric) / std::abs(numeric), 1e-5)
                    << "alpha=" << a << " q=" << probs[i] << " label=" << int(labels[i]);
            }
        }
    }
}
