#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ntl/core_model.hpp"
#include "ntl/hyperparams.hpp"
#include "ntl/random.hpp"

namespace ntl {

/// P(score_pos > score_neg) + 0.5 * P(score_pos == score_neg), via mid-ranks.
/// Throws UndefinedMetric when one class is absent.
double auc(std::span<const double> scores, std::span<const int> labels);

/// k disjoint folds whose union is every index. Each class is shuffled with
/// the seed and dealt round-robin, the negatives continuing where the
/// positives stopped, so fold sizes differ by at most one and every fold's
/// positive count is within one of the global share. Throws ConfigError for
/// k < 2 or a class smaller than k.
std::vector<std::vector<std::size_t>> stratified_k_fold(std::span<const int> labels, std::size_t k, std::uint64_t seed);

/// One independent draw from the search space for `kind`: log-uniform for the
/// learning rate and l2 penalty, uniform integers on the half-open integer
/// ranges, uniform over categories.
HyperParams sample_hyperparams(ClassifierKind kind, Rng& rng);

struct CandidateResult {
    std::size_t index = 0;
    HyperParams params;
    std::vector<double> fold_aucs;
    double mean_auc = 0.0;
    bool failed = false;
    std::string error;
};

struct SearchResult {
    ClassifierKind kind = ClassifierKind::RF;
    std::size_t k = 10;
    std::size_t n_candidates = 100;
    std::uint64_t seed = 0;
    std::vector<std::string> features;
    std::vector<CandidateResult> candidates;
    std::optional<std::size_t> winner; // index into candidates; ties go to the earliest

    const CandidateResult& best() const;
};

struct SearchOptions {
    std::size_t n_candidates = 100;
    std::size_t k = 10;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    /// Fixed parameters to evaluate instead of sampled ones (tests, reruns).
    std::vector<HyperParams> fixed_candidates;
};

/// Randomized search with stratified k-fold cross-validation. Each
/// (candidate, fold) job trains on the other k-1 folds, with class weights
/// recomputed on that training split, and records the held-out AUC. A
/// candidate whose training throws is marked failed and skipped.
SearchResult run_search(const LabeledDataset& data, ClassifierKind kind, const SearchOptions& options = {});

/// Training seed for a (candidate, fold) job.
std::uint64_t job_seed(std::uint64_t search_seed, std::size_t candidate, std::size_t fold);

nlohmann::json to_json(const SearchResult& result);

} // namespace ntl
