#include "ntl/model_select.hpp"

#include <algorithm>
#include <numeric>

#include "ntl/model.hpp"
#include "ntl/parallel.hpp"

namespace ntl {

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw InvalidInput("one label per score is required");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double mid_rank = (static_cast<double>(i) + static_cast<double>(j) + 1.0) / 2.0; // 1-based
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) {
                rank_sum_pos += mid_rank;
                ++n_pos;
            } else if (labels[order[k]] != 0) {
                throw InvalidInput("labels must be 0 or 1");
            }
        }
        i = j;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw UndefinedMetric("AUC needs both classes");
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

std::vector<std::vector<std::size_t>> stratified_k_fold(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("k-fold cross-validation needs k >= 2");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
    if (pos.size() < k || neg.size() < k)
        throw ConfigError("each class needs at least k=" + std::to_string(k) + " examples (have " +
                          std::to_string(neg.size()) + " negatives, " + std::to_string(pos.size()) + " positives)");
    Rng rng(seed);
    rng.shuffle(pos);
    rng.shuffle(neg);
    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t slot = 0;
    for (auto i : pos) folds[slot++ % k].push_back(i);
    for (auto i : neg) folds[slot++ % k].push_back(i);
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

HyperParams sample_hyperparams(ClassifierKind kind, Rng& rng) {
    using namespace bounds;
    HyperParams p;
    p.kind = kind;
    if (kind == ClassifierKind::LSVM) {
        p.l2_reg = rng.log_uniform(kL2Min, kL2Max);
        return p;
    }
    if (kind == ClassifierKind::GBT) {
        p.learning_rate = rng.log_uniform(kLearningRateMin, kLearningRateMax);
        p.loss = rng.uniform() < 0.5 ? BoostLoss::AdaBoost : BoostLoss::Deviance;
    }
    p.max_leaves = static_cast<int>(rng.uniform_int(kMaxLeavesMin, kMaxLeavesEnd - 1));
    p.max_depth = static_cast<int>(rng.uniform_int(kMaxDepthMin, kMaxDepthEnd - 1));
    if (kind != ClassifierKind::GBT) p.criterion = rng.uniform() < 0.5 ? SplitCriterion::Entropy : SplitCriterion::Gini;
    p.min_samples_leaf = static_cast<int>(rng.uniform_int(kMinSamplesLeafMin, kMinSamplesLeafEnd - 1));
    p.min_samples_split = static_cast<int>(rng.uniform_int(kMinSamplesSplitMin, kMinSamplesSplitEnd - 1));
    if (kind != ClassifierKind::DT) p.n_estimators = kEstimators;
    return p;
}

std::uint64_t job_seed(std::uint64_t search_seed, std::size_t candidate, std::size_t fold) {
    return derive_seed(derive_seed(search_seed, 0x5eed0000ULL + candidate), fold);
}

const CandidateResult& SearchResult::best() const {
    if (!winner) throw InvalidDataset("search has no successful candidate");
    return candidates.at(*winner);
}

SearchResult run_search(const LabeledDataset& data, ClassifierKind kind, const SearchOptions& options) {
    SearchResult result;
    result.kind = kind;
    result.k = options.k;
    result.seed = options.seed;
    result.features = data.matrix.qualified_names();

    const auto folds = stratified_k_fold(data.labels, options.k, options.seed);
    std::vector<HyperParams> params = options.fixed_candidates;
    if (params.empty()) {
        Rng rng(derive_seed(options.seed, 1));
        for (std::size_t c = 0; c < options.n_candidates; ++c) params.push_back(sample_hyperparams(kind, rng));
    }
    result.n_candidates = params.size();

    // Train/test index lists per fold.
    std::vector<std::vector<std::size_t>> train_rows(options.k);
    for (std::size_t f = 0; f < options.k; ++f) {
        for (std::size_t g = 0; g < options.k; ++g)
            if (g != f) train_rows[f].insert(train_rows[f].end(), folds[g].begin(), folds[g].end());
        std::sort(train_rows[f].begin(), train_rows[f].end());
    }

    const std::size_t jobs = params.size() * options.k;
    std::vector<double> fold_auc(jobs, 0.0);
    std::vector<std::string> errors(jobs);
    parallel_for(jobs, options.threads, [&](std::size_t job) {
        const std::size_t c = job / options.k, f = job % options.k;
        try {
            const LabeledDataset train = data.subset(train_rows[f]);
            TrainOptions to;
            to.seed = job_seed(options.seed, c, f);
            const TrainedModel model = train_model(train, params[c], to);
            const FeatureMatrix test = data.matrix.select_rows(folds[f]);
            std::vector<int> y;
            y.reserve(folds[f].size());
            for (auto i : folds[f]) y.push_back(data.labels[i]);
            fold_auc[job] = auc(predict(model, test), y);
        } catch (const std::exception& e) {
            errors[job] = e.what();
        }
    });

    for (std::size_t c = 0; c < params.size(); ++c) {
        CandidateResult cr;
        cr.index = c;
        cr.params = params[c];
        for (std::size_t f = 0; f < options.k; ++f) {
            const std::size_t job = c * options.k + f;
            if (!errors[job].empty() && !cr.failed) {
                cr.failed = true;
                cr.error = errors[job];
            }
            cr.fold_aucs.push_back(fold_auc[job]);
        }
        if (!cr.failed) {
            cr.mean_auc = std::accumulate(cr.fold_aucs.begin(), cr.fold_aucs.end(), 0.0) /
                          static_cast<double>(cr.fold_aucs.size());
            if (!result.winner || cr.mean_auc > result.candidates[*result.winner].mean_auc) result.winner = c;
        }
        result.candidates.push_back(std::move(cr));
    }
    return result;
}

nlohmann::json to_json(const SearchResult& result) {
    nlohmann::json j;
    j["schema"] = "ntl.search.v1";
    j["classifier"] = to_string(result.kind);
    j["k"] = result.k;
    j["n_candidates"] = result.n_candidates;
    j["seed"] = result.seed;
    j["features"] = result.features;
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& c : result.candidates) {
        nlohmann::json cj{{"index", c.index}, {"params", to_json(c.params)}, {"fold_aucs", c.fold_aucs},
                          {"mean_auc", c.mean_auc}, {"failed", c.failed}};
        if (c.failed) cj["error"] = c.error;
        cands.push_back(std::move(cj));
    }
    j["candidates"] = cands;
    if (result.winner) {
        const auto& w = result.candidates[*result.winner];
        j["winner"] = {{"index", w.index}, {"mean_auc", w.mean_auc}, {"params", to_json(w.params)}};
    } else {
        j["winner"] = nullptr;
    }
    return j;
}

} // namespace ntl
