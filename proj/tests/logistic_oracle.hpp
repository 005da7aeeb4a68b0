#pragma once

// Ridge-regularised logistic regression fitted by IRLS. Used as the
// learnability oracle for synthetic cohorts; independent of the network code.

#include "thc/datagen.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace thc::testing {

/// Encoded clinical vector plus two image summaries (peak and mean intensity).
inline Eigen::MatrixXd oracle_features(std::span<const PatientRecord> records, const NormalizationStats& stats) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(kEncodedClinicalDim + 3));
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto enc = encode_clinical(records[i].quantitative, records[i].qualitative, stats);
        const auto& vol = records[i].volume.storage();
        const auto row = static_cast<Eigen::Index>(i);
        x(row, 0) = 1.0;
        for (std::size_t k = 0; k < enc.size(); ++k) x(row, static_cast<Eigen::Index>(k + 1)) = enc[k];
        const double peak = *std::max_element(vol.begin(), vol.end());
        double mean = 0.0;
        for (double v : vol) mean += v;
        x(row, static_cast<Eigen::Index>(kEncodedClinicalDim + 1)) = 10.0 * peak;
        x(row, static_cast<Eigen::Index>(kEncodedClinicalDim + 2)) = 10.0 * mean / static_cast<double>(vol.size());
    }
    return x;
}

inline Eigen::VectorXd fit_logistic(const Eigen::MatrixXd& x, const std::vector<std::uint8_t>& labels,
                                    double ridge = 1e-3, int iterations = 50) {
    const auto n = x.rows(), d = x.cols();
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = labels[static_cast<std::size_t>(i)];
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    for (int it = 0; it < iterations; ++it) {
        const Eigen::VectorXd p = ((-(x * w)).array().exp() + 1.0).inverse();
        const Eigen::VectorXd s = (p.array() * (1.0 - p.array())).max(1e-9);
        Eigen::MatrixXd h = x.transpose() * s.asDiagonal() * x;
        h.diagonal().array() += ridge;
        const Eigen::VectorXd g = x.transpose() * (p - y) + ridge * w;
        const Eigen::VectorXd step = h.ldlt().solve(g);
        w -= step;
        if (step.norm() < 1e-10) break;
    }
    return w;
}

/// Fits on `train` and returns accuracy on `test`; stats come from `train` only.
inline double logistic_oracle_accuracy(std::span<const PatientRecord> train, std::span<const PatientRecord> test) {
    const auto stats = compute_normalization_stats(train);
    std::vector<std::uint8_t> train_labels;
    for (const auto& r : train) train_labels.push_back(r.recurrence);
    const auto w = fit_logistic(oracle_features(train, stats), train_labels);
    const Eigen::VectorXd z = oracle_features(test, stats) * w;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        hits += static_cast<std::size_t>((z(static_cast<Eigen::Index>(i)) >= 0.0) == (test[i].recurrence == 1));
    }
    return static_cast<double>(hits) / static_cast<double>(test.size());
}

/// 80/20 split in generation order (records are i.i.d.).
inline double holdout_oracle_accuracy(const std::vector<PatientRecord>& cohort) {
    const std::size_t cut = cohort.size() * 4 / 5;
    return logistic_oracle_accuracy(std::span(cohort).first(cut), std::span(cohort).subspan(cut));
}

} // namespace thc::testing
