#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ntl/core_model.hpp"
#include "ntl/hyperparams.hpp"

namespace ntl {

/// Column-major copy of a feature matrix; split search reads one feature at
/// a time.
class ColumnStore {
public:
    explicit ColumnStore(const FeatureMatrix& m);
    ColumnStore(std::size_t rows, std::size_t cols, std::vector<double> column_major);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double at(std::size_t row, std::size_t col) const { return data_[col * rows_ + row]; }
    std::span<const double> column(std::size_t col) const { return {data_.data() + col * rows_, rows_}; }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

/// Weighted impurities of a node holding `w_pos` positive weight out of
/// `w_total`. Entropy is in bits.
double gini_impurity(double w_pos, double w_total);
double entropy_impurity(double w_pos, double w_total);

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;  // x[feature] <= threshold
    int right = -1; // x[feature] > threshold
    double value = 0.0; // leaf score, also kept on internal nodes
    double weight = 0.0;
    double count = 0.0;
    double gain = 0.0;  // impurity decrease of the split, 0 on leaves

    bool is_leaf() const noexcept { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

class DecisionTree {
public:
    DecisionTree() = default;
    explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

    double predict(std::span<const double> row) const { return nodes_[static_cast<std::size_t>(leaf_index(row))].value; }
    int leaf_index(std::span<const double> row) const;

    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    std::vector<TreeNode>& nodes() noexcept { return nodes_; }
    std::size_t leaves() const;
    int depth() const;

    bool operator==(const DecisionTree&) const = default;

private:
    std::vector<TreeNode> nodes_;
};

struct TreeGrowParams {
    SplitCriterion criterion = SplitCriterion::Gini; // ignored by regression trees
    int max_depth = 49;
    int max_leaves = 999;
    int min_samples_leaf = 1;
    int min_samples_split = 2;
    std::size_t max_features = 0; // per-split random subset size, 0 = all features
    std::uint64_t seed = 0;
};

/// Tree params from a DT/RF/GBT hyperparameter point.
TreeGrowParams tree_params(const HyperParams& p);

/// Best-first CART growth.
///
/// Each split maximises the weighted impurity decrease
///     W * I(node) - W_L * I(left) - W_R * I(right)
/// over features and midpoint thresholds between consecutive distinct values.
/// Gains within a relative 1e-12 of each other count as ties and go to the
/// lowest feature index, then the lowest threshold. Nodes are expanded in
/// order of decreasing gain until max_leaves is reached or no node can split.
///
/// `weight` is the per-row sample weight (class weight x multiplicity);
/// `count` is the multiplicity used by the min_samples limits. Rows with a
/// zero count are ignored. Leaf value = weighted positive fraction.
DecisionTree grow_classification_tree(const ColumnStore& x, std::span<const int> y, std::span<const double> weight,
                                      std::span<const double> count, const TreeGrowParams& params);

/// Same growth on weighted squared error; leaf value = weighted mean target.
DecisionTree grow_regression_tree(const ColumnStore& x, std::span<const double> target,
                                  std::span<const double> weight, std::span<const double> count,
                                  const TreeGrowParams& params);

/// Relative tolerance used by the split tie-break.
inline constexpr double kSplitTieTolerance = 1e-12;

} // namespace ntl
