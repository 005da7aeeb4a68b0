#pragma once

// Reference fold accuracies of two 5-fold alpha sweeps (head-neck and lung
// cohorts). Typographically damaged cells are repaired to their evident value and the
// row is flagged `damaged` so value-level checks can skip it.

#include <optional>
#include <vector>

namespace thc::testing {

struct PrintedRow {
    double alpha;
    std::vector<double> folds;
    double average;
    double sd;
    std::optional<double> p_value;
    bool highlighted;
    bool damaged;
};

inline const std::vector<PrintedRow> kHeadNeckSweep = {
    {0.1, {0.68, 0.53, 0.6, 0.58, 0.63}, 0.60, 0.06, 0.01, false, false},
    {0.3, {0.60, 0.70, 0.70, 0.70, 0.43}, 0.63, 0.12, 0.28, false, false},
    {0.5, {0.58, 0.58, 0.60, 0.70, 0.73}, 0.64, 0.07, 0.27, false, false},
    {0.7, {0.85, 0.70, 0.60, 0.70, 0.65}, 0.70, 0.09, 0.25, false, false},
    {0.9, {0.58, 0.60, 0.60, 0.60, 0.68}, 0.61, 0.04, 0.07, false, false},
    {1.0, {0.75, 0.65, 0.68, 0.58, 0.70}, 0.67, 0.06, std::nullopt, false, false},
    {1.1, {0.68, 0.75, 0.75, 0.73, 0.75}, 0.73, 0.03, 0.09, false, false},
    {1.3, {0.63, 0.73, 0.68, 0.75, 0.70}, 0.70, 0.05, 0.32, false, false},
    {1.5, {0.70, 0.78, 0.85, 0.80, 0.88}, 0.80, 0.07, 0.03, true, false},
    {1.7, {0.80, 0.73, 0.63, 0.75, 0.78}, 0.74, 0.07, 0.07, false, true},
    {1.9, {0.75, 0.73, 0.73, 0.75, 0.83}, 0.76, 0.05, 0.02, true, false},
    {2.1, {0.68, 0.63, 0.60, 0.62, 0.575}, 0.63, 0.04, 0.12, false, false},
    {2.3, {0.73, 0.73, 0.73, 0.73, 0.7}, 0.72, 0.01, 0.09, false, false},
    {2.5, {0.75, 0.58, 0.68, 0.68, 0.6}, 0.66, 0.07, 0.34, false, false},
    {2.7, {0.68, 0.53, 0.45, 0.63, 0.6}, 0.58, 0.09, 0.04, false, false},
    {2.9, {0.73, 0.73, 0.73, 0.75, 0.73}, 0.73, 0.01, 0.07, false, false},
    {3.1, {0.7, 0.55, 0.65, 0.57, 0.63}, 0.62, 0.06, 0.02, false, false},
    {3.3, {0.65, 0.65, 0.65, 0.58, 0.55}, 0.62, 0.05, 0.07, false, false},
    {3.5, {0.73, 0.75, 0.73, 0.75, 0.70}, 0.73, 0.02, 0.08, false, false},
    {3.7, {0.73, 0.70, 0.60, 0.60, 0.58}, 0.64, 0.07, 0.20, false, false},
    {3.9, {0.68, 0.70, 0.55, 0.58, 0.53}, 0.61, 0.08, 0.09, false, false},
};

inline const std::vector<PrintedRow> kLungSweep = {
    {0.1, {0.58, 0.58, 0.47, 0.58, 0.63}, 0.57, 0.06, 0.23, false, false},
    {0.3, {0.58, 0.58, 0.58, 0.58, 0.68}, 0.60, 0.04, 0.13, false, false},
    {0.5, {0.63, 0.58, 0.52, 0.58, 0.52}, 0.56, 0.03, 0.26, false, false},
    {0.7, {0.58, 0.58, 0.63, 0.63, 0.58}, 0.60, 0.03, 0.13, false, false},
    {0.9, {0.63, 0.53, 0.68, 0.47, 0.53}, 0.57, 0.08, 0.21, false, true},
    {1.0, {0.73, 0.47, 0.47, 0.47, 0.47}, 0.52, 0.12, std::nullopt, false, false},
    {1.1, {0.63, 0.63, 0.52, 0.52, 0.52}, 0.56, 0.06, 0.18, false, false},
    {1.3, {0.68, 0.53, 0.53, 0.47, 0.53}, 0.55, 0.08, 0.15, false, false},
    {1.5, {0.58, 0.53, 0.53, 0.47, 0.53}, 0.53, 0.04, 0.44, false, false},
    {1.7, {0.73, 0.47, 0.63, 0.57, 0.42}, 0.56, 0.12, 0.37, false, false},
    {1.9, {0.69, 0.63, 0.58, 0.53, 0.68}, 0.62, 0.07, 0.04, true, false},
    {2.1, {0.79, 0.84, 0.73, 0.79, 0.79}, 0.79, 0.04, 0.004, true, true},
    {2.3, {0.84, 0.78, 0.84, 0.73, 0.84}, 0.81, 0.05, 0.002, true, false},
    {2.5, {0.79, 0.84, 0.74, 0.68, 0.63}, 0.74, 0.08, 0.007, true, false},
    {2.7, {0.79, 0.74, 0.69, 0.74, 0.74}, 0.74, 0.04, 0.003, true, false},
    {2.9, {0.79, 0.79, 0.79, 0.79, 0.73}, 0.78, 0.03, 0.004, true, false},
    {3.1, {0.74, 0.74, 0.78, 0.78, 0.68}, 0.74, 0.04, 0.008, true, false},
    {3.3, {0.79, 0.79, 0.74, 0.74, 0.74}, 0.76, 0.03, 0.003, true, false},
    {3.5, {0.74, 0.73, 0.68, 0.33, 0.58}, 0.61, 0.17, 0.12, false, false},
    {3.7, {0.68, 0.63, 0.47, 0.63, 0.73}, 0.63, 0.09, 0.07, false, false},
    {3.9, {0.78, 0.53, 0.47, 0.47, 0.63}, 0.58, 0.13, 0.07, false, false},
};

} // namespace thc::testing
