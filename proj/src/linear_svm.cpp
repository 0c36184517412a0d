#include "ntl/linear_svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ntl/ensemble.hpp"
#include "ntl/random.hpp"

namespace ntl {

double LinearModel::margin(std::span<const double> row) const {
    double m = bias;
    for (std::size_t j = 0; j < weights.size(); ++j) m += weights[j] * (row[j] - mean[j]) / scale[j];
    return m;
}

double LinearModel::predict(std::span<const double> row) const { return sigmoid(margin(row)); }

ColumnStore standardize(const ColumnStore& x, const LinearModel& model) {
    std::vector<double> data(x.rows() * x.cols());
    for (std::size_t c = 0; c < x.cols(); ++c) {
        auto col = x.column(c);
        for (std::size_t r = 0; r < x.rows(); ++r) data[c * x.rows() + r] = (col[r] - model.mean[c]) / model.scale[c];
    }
    return ColumnStore(x.rows(), x.cols(), std::move(data));
}

double svm_objective(std::span<const double> w, double b, const ColumnStore& z, std::span<const int> y,
                     std::span<const double> sample_weight, double l2) {
    const std::size_t n = z.rows();
    const double mean_w = std::accumulate(sample_weight.begin(), sample_weight.end(), 0.0) / static_cast<double>(n);
    double hinge = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double m = b;
        for (std::size_t j = 0; j < z.cols(); ++j) m += w[j] * z.at(i, j);
        const double s = y[i] ? 1.0 : -1.0;
        hinge += sample_weight[i] / mean_w * std::max(0.0, 1.0 - s * m);
    }
    const double norm2 = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
    return l2 * norm2 + hinge / static_cast<double>(n);
}

LinearModel train_linear_svm(const ColumnStore& x, std::span<const int> y, std::span<const double> sample_weight,
                             double l2, std::uint64_t seed, const SvmOptions& options) {
    if (!(l2 > 0.0)) throw ConfigError("l2_reg must be positive");
    if (options.epochs < 2) throw ConfigError("linear SVM needs at least 2 epochs");
    const std::size_t n = x.rows(), d = x.cols();
    if (n == 0) throw InvalidDataset("linear SVM needs at least one row");

    LinearModel model;
    model.mean.assign(d, 0.0);
    model.scale.assign(d, 1.0);
    for (std::size_t c = 0; c < d; ++c) {
        auto col = x.column(c);
        const double mu = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(n);
        double var = 0.0;
        for (double v : col) var += (v - mu) * (v - mu);
        var /= static_cast<double>(n);
        model.mean[c] = mu;
        model.scale[c] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    const ColumnStore z = standardize(x, model);
    // Row-major copy for the per-example passes.
    std::vector<double> rows(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) rows[i * d + c] = z.at(i, c);

    const double mean_w = std::accumulate(sample_weight.begin(), sample_weight.end(), 0.0) / static_cast<double>(n);
    const double radius = 1.0 / std::sqrt(l2);

    std::vector<double> w(d, 0.0), w_sum(d, 0.0);
    double b = 0.0, b_sum = 0.0, averaged = 0.0;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    std::uint64_t t = 0;
    const int average_from = options.epochs / 2;
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t i : order) {
            ++t;
            const double eta = 1.0 / (2.0 * l2 * static_cast<double>(t));
            const double* zi = rows.data() + i * d;
            const double s = y[i] ? 1.0 : -1.0;
            double m = b;
            for (std::size_t j = 0; j < d; ++j) m += w[j] * zi[j];
            const double shrink = 1.0 - eta * 2.0 * l2;
            for (auto& wj : w) wj *= shrink;
            if (s * m < 1.0) {
                const double step = eta * sample_weight[i] / mean_w * s;
                for (std::size_t j = 0; j < d; ++j) w[j] += step * zi[j];
                b += step;
            }
            const double norm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
            if (norm > radius)
                for (auto& wj : w) wj *= radius / norm;
            if (epoch >= average_from) {
                for (std::size_t j = 0; j < d; ++j) w_sum[j] += w[j];
                b_sum += b;
                averaged += 1.0;
            }
        }
    }
    model.weights.resize(d);
    for (std::size_t j = 0; j < d; ++j) model.weights[j] = w_sum[j] / averaged;
    model.bias = b_sum / averaged;

    // The unregularized bias converges slowly under the decaying step, so
    // it is re-fitted exactly for the averaged weights. The hinge sum is
    // piecewise linear in b; sweep its breakpoints until the slope turns
    // non-negative.
    std::vector<std::pair<double, double>> breaks(n); // (breakpoint, weight)
    double slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double m = 0.0;
        for (std::size_t j = 0; j < d; ++j) m += model.weights[j] * rows[i * d + j];
        const double c = sample_weight[i] / mean_w;
        breaks[i] = {y[i] ? 1.0 - m : -1.0 - m, c};
        if (y[i]) slope -= c;
    }
    std::sort(breaks.begin(), breaks.end());
    for (std::size_t k = 0; k < n; ++k) {
        slope += breaks[k].second;
        if (slope > 0.0) {
            model.bias = breaks[k].first;
            break;
        }
        if (slope == 0.0) {
            model.bias = k + 1 < n ? (breaks[k].first + breaks[k + 1].first) / 2.0 : breaks[k].first;
            break;
        }
    }
    return model;
}

} // namespace ntl
