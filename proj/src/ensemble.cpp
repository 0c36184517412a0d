#include "ntl/ensemble.hpp"

#include <cmath>

#include "ntl/parallel.hpp"
#include "ntl/random.hpp"

namespace ntl {

std::vector<double> bootstrap_counts(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> counts(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) counts[rng.index(n)] += 1.0;
    return counts;
}

std::uint64_t forest_tree_seed(std::uint64_t seed, std::size_t t) { return derive_seed(seed, t); }

std::size_t forest_max_features(std::size_t n_features) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n_features)))));
}

double ForestModel::predict(std::span<const double> row) const {
    double acc = 0.0;
    for (const auto& t : trees) acc += t.predict(row);
    return trees.empty() ? 0.0 : acc / static_cast<double>(trees.size());
}

ForestModel train_forest(const ColumnStore& x, std::span<const int> y, std::span<const double> class_weight,
                         const TreeGrowParams& params, const ForestOptions& options, std::uint64_t seed) {
    if (options.n_trees == 0) throw ConfigError("a forest needs at least one tree");
    ForestModel forest;
    forest.trees.resize(options.n_trees);
    parallel_for(options.n_trees, options.threads, [&](std::size_t t) {
        const std::uint64_t tree_seed = forest_tree_seed(seed, t);
        std::vector<double> counts = options.bootstrap ? bootstrap_counts(x.rows(), tree_seed)
                                                       : std::vector<double>(x.rows(), 1.0);
        std::vector<double> weight(x.rows());
        for (std::size_t i = 0; i < weight.size(); ++i) weight[i] = class_weight[i] * counts[i];
        TreeGrowParams p = params;
        p.seed = tree_seed;
        p.max_features = options.subsample_features ? forest_max_features(x.cols()) : 0;
        forest.trees[t] = grow_classification_tree(x, y, weight, counts, p);
    });
    return forest;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace boost_loss {

double deviance(int y, double f) {
    // log(1 + e^f) without overflow
    const double softplus = f > 0.0 ? f + std::log1p(std::exp(-f)) : std::log1p(std::exp(f));
    return softplus - y * f;
}

double deviance_negative_gradient(int y, double f) { return y - sigmoid(f); }

double exponential(int y, double f) { return std::exp(-(2.0 * y - 1.0) * f); }

double exponential_negative_gradient(int y, double f) {
    const double s = 2.0 * y - 1.0;
    return s * std::exp(-s * f);
}

} // namespace boost_loss

double BoostedModel::margin(std::span<const double> row) const {
    double f = base_score;
    for (const auto& t : trees) f += learning_rate * t.predict(row);
    return f;
}

BoostedModel train_boosted(const ColumnStore& x, std::span<const int> y, std::span<const double> class_weight,
                           const TreeGrowParams& params, BoostLoss loss, double learning_rate, std::size_t n_stages) {
    const std::size_t n = x.rows();
    BoostedModel model;
    model.loss = loss;
    model.learning_rate = learning_rate;
    if (loss == BoostLoss::Deviance) {
        double wpos = 0.0, wneg = 0.0;
        for (std::size_t i = 0; i < n; ++i) (y[i] ? wpos : wneg) += class_weight[i];
        if (!(wpos > 0.0 && wneg > 0.0)) throw InvalidDataset("boosting needs both classes");
        model.base_score = std::log(wpos / wneg);
    }

    const std::vector<double> ones(n, 1.0);
    std::vector<double> margin(n, model.base_score), residual(n), hessian(n);
    for (std::size_t stage = 0; stage < n_stages; ++stage) {
        for (std::size_t i = 0; i < n; ++i) {
            if (loss == BoostLoss::Deviance) {
                const double p = sigmoid(margin[i]);
                residual[i] = y[i] - p;
                hessian[i] = p * (1.0 - p);
            } else {
                const double s = 2.0 * y[i] - 1.0;
                const double e = std::exp(-s * margin[i]);
                residual[i] = s * e;
                hessian[i] = e;
            }
        }
        DecisionTree tree = grow_regression_tree(x, residual, class_weight, ones, params);

        // Newton step per leaf: sum(w * r) / sum(w * h).
        auto& nodes = tree.nodes();
        std::vector<double> num(nodes.size(), 0.0), den(nodes.size(), 0.0);
        std::vector<int> leaf(n);
        std::vector<double> row(x.cols());
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < x.cols(); ++c) row[c] = x.at(i, c);
            leaf[i] = tree.leaf_index(row);
            num[static_cast<std::size_t>(leaf[i])] += class_weight[i] * residual[i];
            den[static_cast<std::size_t>(leaf[i])] += class_weight[i] * hessian[i];
        }
        for (std::size_t k = 0; k < nodes.size(); ++k)
            if (nodes[k].is_leaf()) nodes[k].value = den[k] > 1e-12 ? num[k] / den[k] : 0.0;
        for (std::size_t i = 0; i < n; ++i)
            margin[i] += learning_rate * nodes[static_cast<std::size_t>(leaf[i])].value;
        model.trees.push_back(std::move(tree));
    }
    return model;
}

} // namespace ntl
