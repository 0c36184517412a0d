#include "ntl/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "ntl/random.hpp"

namespace ntl {

ColumnStore::ColumnStore(const FeatureMatrix& m) : rows_(m.rows()), cols_(m.cols()), data_(m.rows() * m.cols()) {
    for (std::size_t r = 0; r < rows_; ++r) {
        auto row = m.row(r);
        for (std::size_t c = 0; c < cols_; ++c) data_[c * rows_ + r] = row[c];
    }
}

ColumnStore::ColumnStore(std::size_t rows, std::size_t cols, std::vector<double> column_major)
    : rows_(rows), cols_(cols), data_(std::move(column_major)) {
    if (data_.size() != rows * cols) throw InvalidInput("column store size mismatch");
}

double gini_impurity(double w_pos, double w_total) {
    if (!(w_total > 0.0)) return 0.0;
    const double p = std::clamp(w_pos / w_total, 0.0, 1.0);
    return 2.0 * p * (1.0 - p);
}

double entropy_impurity(double w_pos, double w_total) {
    if (!(w_total > 0.0)) return 0.0;
    const double p = std::clamp(w_pos / w_total, 0.0, 1.0);
    double h = 0.0;
    if (p > 0.0) h -= p * std::log2(p);
    if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
    return h;
}

int DecisionTree::leaf_index(std::span<const double> row) const {
    int i = 0;
    while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
        const auto& n = nodes_[static_cast<std::size_t>(i)];
        i = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return i;
}

std::size_t DecisionTree::leaves() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int DecisionTree::depth() const {
    if (nodes_.empty()) return 0;
    std::vector<int> d(nodes_.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        if (n.is_leaf()) continue;
        d[static_cast<std::size_t>(n.left)] = d[static_cast<std::size_t>(n.right)] = d[i] + 1;
        best = std::max(best, d[i] + 1);
    }
    return best;
}

TreeGrowParams tree_params(const HyperParams& p) {
    TreeGrowParams t;
    if (p.criterion) t.criterion = *p.criterion;
    if (p.max_depth) t.max_depth = *p.max_depth;
    if (p.max_leaves) t.max_leaves = *p.max_leaves;
    if (p.min_samples_leaf) t.min_samples_leaf = *p.min_samples_leaf;
    if (p.min_samples_split) t.min_samples_split = *p.min_samples_split;
    return t;
}

namespace {

enum class Cost { Gini, Entropy, SquaredError };

// Sufficient statistics of a set of rows: total weight, weighted "signal"
// (positive weight for classification, weighted target sum for regression)
// and multiplicity.
struct Acc {
    double w = 0.0, a = 0.0, n = 0.0;

    Acc operator-(const Acc& o) const { return {w - o.w, a - o.a, n - o.n}; }
};

// W * impurity; for squared error the constant sum of w*t^2 is dropped.
double node_cost(const Acc& s, Cost cost) {
    if (!(s.w > 0.0)) return 0.0;
    switch (cost) {
    case Cost::Gini: return s.w * gini_impurity(s.a, s.w);
    case Cost::Entropy: return s.w * entropy_impurity(s.a, s.w);
    case Cost::SquaredError: return -s.a * s.a / s.w;
    }
    return 0.0;
}

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

class Builder {
public:
    Builder(const ColumnStore& x, std::span<const double> w, std::vector<double> a, std::span<const double> n,
            const TreeGrowParams& params, Cost cost)
        : x_(x), w_(w), a_(std::move(a)), n_(n), params_(params), cost_(cost), rng_(params.seed) {
        if (w_.size() != x.rows() || n_.size() != x.rows())
            throw InvalidInput("tree inputs must have one weight and count per row");
        if (params_.max_depth < 1 || params_.max_leaves < 2 || params_.min_samples_leaf < 1 ||
            params_.min_samples_split < 2)
            throw ConfigError("invalid tree growth parameters");
        features_.resize(x.cols());
        std::iota(features_.begin(), features_.end(), 0u);
    }

    DecisionTree build() {
        std::vector<std::uint32_t> root_rows;
        for (std::size_t i = 0; i < x_.rows(); ++i)
            if (n_[i] > 0.0) root_rows.push_back(static_cast<std::uint32_t>(i));
        if (root_rows.empty()) throw InvalidDataset("tree training needs at least one row");

        add_node(std::move(root_rows), 0);
        std::size_t leaves = 1;
        while (!queue_.empty() && leaves < static_cast<std::size_t>(params_.max_leaves)) {
            const auto [gain, neg_id] = queue_.top();
            queue_.pop();
            const auto id = static_cast<std::size_t>(-neg_id);
            split_node(id);
            ++leaves;
        }
        for (auto& p : pending_) p.rows.clear();
        return DecisionTree(std::move(nodes_));
    }

private:
    struct Pending {
        std::vector<std::uint32_t> rows;
        int depth = 0;
        Split best;
    };

    Acc stats(const std::vector<std::uint32_t>& rows) const {
        Acc s;
        for (auto r : rows) {
            s.w += w_[r];
            s.a += a_[r];
            s.n += n_[r];
        }
        return s;
    }

    int add_node(std::vector<std::uint32_t> rows, int depth) {
        const Acc s = stats(rows);
        TreeNode node;
        node.weight = s.w;
        node.count = s.n;
        node.value = s.w > 0.0 ? s.a / s.w : 0.0;
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back(node);

        Pending p;
        p.depth = depth;
        const bool can_split = depth < params_.max_depth && s.n >= params_.min_samples_split &&
                               s.n >= 2.0 * params_.min_samples_leaf && rows.size() >= 2;
        if (can_split) {
            p.best = find_split(rows, s);
            if (p.best.feature >= 0) queue_.push({p.best.gain, -id});
        }
        p.rows = std::move(rows);
        pending_.push_back(std::move(p));
        return id;
    }

    std::vector<std::uint32_t> candidate_features() {
        const std::size_t k = params_.max_features;
        if (k == 0 || k >= features_.size()) return features_;
        std::vector<std::uint32_t> pool = features_;
        for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng_.index(pool.size() - i)]);
        pool.resize(k);
        std::sort(pool.begin(), pool.end());
        return pool;
    }

    Split find_split(const std::vector<std::uint32_t>& rows, const Acc& parent) {
        const double parent_cost = node_cost(parent, cost_);
        const double tol = kSplitTieTolerance * (std::abs(parent_cost) + parent.w);
        const double min_leaf = params_.min_samples_leaf;
        Split best;
        best.gain = tol; // a split must beat zero gain by more than the tie tolerance

        std::vector<std::pair<double, std::uint32_t>> order(rows.size());
        for (auto f : candidate_features()) {
            const auto col = x_.column(f);
            for (std::size_t i = 0; i < rows.size(); ++i) order[i] = {col[rows[i]], rows[i]};
            std::sort(order.begin(), order.end());
            if (order.front().first == order.back().first) continue;

            Acc left;
            for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                const auto r = order[i].second;
                left.w += w_[r];
                left.a += a_[r];
                left.n += n_[r];
                const double v = order[i].first, next = order[i + 1].first;
                if (v == next) continue;
                const Acc right = parent - left;
                if (left.n < min_leaf || right.n < min_leaf) continue;
                const double gain = parent_cost - node_cost(left, cost_) - node_cost(right, cost_);
                if (gain > best.gain + (best.feature < 0 ? 0.0 : tol)) {
                    double thr = v + (next - v) / 2.0;
                    if (!(thr < next)) thr = v;
                    best = {static_cast<int>(f), thr, gain};
                }
            }
        }
        return best;
    }

    void split_node(std::size_t id) {
        Pending& p = pending_[id];
        const Split s = p.best;
        std::vector<std::uint32_t> left_rows, right_rows;
        const auto col = x_.column(static_cast<std::size_t>(s.feature));
        for (auto r : p.rows) (col[r] <= s.threshold ? left_rows : right_rows).push_back(r);
        const int depth = p.depth + 1;
        p.rows.clear();
        p.rows.shrink_to_fit();

        nodes_[id].feature = s.feature;
        nodes_[id].threshold = s.threshold;
        nodes_[id].gain = s.gain;
        const int l = add_node(std::move(left_rows), depth);
        const int r = add_node(std::move(right_rows), depth);
        nodes_[id].left = l;
        nodes_[id].right = r;
    }

    const ColumnStore& x_;
    std::span<const double> w_;
    std::vector<double> a_;
    std::span<const double> n_;
    TreeGrowParams params_;
    Cost cost_;
    Rng rng_;
    std::vector<std::uint32_t> features_;
    std::vector<TreeNode> nodes_;
    std::vector<Pending> pending_;
    std::priority_queue<std::pair<double, int>> queue_; // (gain, -node id): max gain, then lowest id
};

} // namespace

DecisionTree grow_classification_tree(const ColumnStore& x, std::span<const int> y, std::span<const double> weight,
                                      std::span<const double> count, const TreeGrowParams& params) {
    if (y.size() != x.rows()) throw InvalidInput("one label per row is required");
    std::vector<double> a(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) a[i] = y[i] ? weight[i] : 0.0;
    const Cost cost = params.criterion == SplitCriterion::Gini ? Cost::Gini : Cost::Entropy;
    return Builder(x, weight, std::move(a), count, params, cost).build();
}

DecisionTree grow_regression_tree(const ColumnStore& x, std::span<const double> target,
                                  std::span<const double> weight, std::span<const double> count,
                                  const TreeGrowParams& params) {
    if (target.size() != x.rows()) throw InvalidInput("one target per row is required");
    std::vector<double> a(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) a[i] = weight[i] * target[i];
    return Builder(x, weight, std::move(a), count, params, Cost::SquaredError).build();
}

} // namespace ntl
