#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ntl/tree.hpp"

namespace ntl {

// ---------------------------------------------------------------------------
// Random forest

struct ForestOptions {
    std::size_t n_trees = bounds::kEstimators;
    bool bootstrap = true;
    bool subsample_features = true; // sqrt(n_features) candidates per split
    unsigned threads = 1;
};

/// Row multiplicities of one bootstrap draw of size n.
std::vector<double> bootstrap_counts(std::size_t n, std::uint64_t seed);

/// Seed used for tree t of a forest trained with `seed`; the same value
/// seeds both the bootstrap draw and the split-feature sampler.
std::uint64_t forest_tree_seed(std::uint64_t seed, std::size_t t);

/// max(1, floor(sqrt(n_features))).
std::size_t forest_max_features(std::size_t n_features);

struct ForestModel {
    std::vector<DecisionTree> trees;

    /// Mean of the tree scores.
    double predict(std::span<const double> row) const;
    bool operator==(const ForestModel&) const = default;
};

ForestModel train_forest(const ColumnStore& x, std::span<const int> y, std::span<const double> class_weight,
                         const TreeGrowParams& params, const ForestOptions& options, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Gradient boosting

/// Per-example losses on the raw margin f, their negative gradients with
/// respect to f, and the Newton leaf step. Labels are 0/1; the exponential
/// loss uses s = 2y - 1.
namespace boost_loss {
double deviance(int y, double f);              // log(1 + e^f) - y f
double deviance_negative_gradient(int y, double f); // y - sigmoid(f)
double exponential(int y, double f);           // exp(-s f)
double exponential_negative_gradient(int y, double f); // s exp(-s f)
} // namespace boost_loss

double sigmoid(double z);

struct BoostedModel {
    BoostLoss loss = BoostLoss::Deviance;
    double learning_rate = 0.1;
    double base_score = 0.0;
    std::vector<DecisionTree> trees; // leaf values hold the unshrunk Newton step

    double margin(std::span<const double> row) const;
    /// sigmoid of the additive margin.
    double predict(std::span<const double> row) const { return sigmoid(margin(row)); }
    bool operator==(const BoostedModel&) const = default;
};

/// Stage-wise fitting of `n_stages` weighted regression trees to the loss's
/// negative gradient. The base margin is the weighted log-odds for deviance
/// and 0 for the exponential loss.
BoostedModel train_boosted(const ColumnStore& x, std::span<const int> y, std::span<const double> class_weight,
                           const TreeGrowParams& params, BoostLoss loss, double learning_rate, std::size_t n_stages);

} // namespace ntl
