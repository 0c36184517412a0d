#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ntl/tree.hpp"

namespace ntl {

struct SvmOptions {
    int epochs = 200;
};

struct LinearModel {
    std::vector<double> weights; // on standardized features
    double bias = 0.0;
    std::vector<double> mean;    // standardization constants from training data
    std::vector<double> scale;

    double margin(std::span<const double> row) const;
    /// Logistic squashing of the margin; 0.5 at the separating hyperplane.
    double predict(std::span<const double> row) const;
    bool operator==(const LinearModel&) const = default;
};

/// Class-weighted soft-margin objective on standardized features z:
///     l2 * |w|^2 + (1/n) * sum_i v_i * max(0, 1 - s_i (w.z_i + b))
/// with s_i = 2y_i - 1 and v_i the sample weights rescaled to mean 1.
double svm_objective(std::span<const double> w, double b, const ColumnStore& z, std::span<const int> y,
                     std::span<const double> sample_weight, double l2);

/// Minimises svm_objective by per-example subgradient steps of size
/// 1 / (2 * l2 * t) (the objective is 2*l2 strongly convex), projecting w
/// onto the ball |w| <= 1/sqrt(l2), over `epochs` seeded passes. Returns the
/// average of the iterates from the second half of training.
LinearModel train_linear_svm(const ColumnStore& x, std::span<const int> y, std::span<const double> sample_weight,
                             double l2, std::uint64_t seed, const SvmOptions& options = {});

/// Standardizes columns with the model's constants.
ColumnStore standardize(const ColumnStore& x, const LinearModel& model);

} // namespace ntl
