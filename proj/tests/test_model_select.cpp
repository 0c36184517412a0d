#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "ntl/error.hpp"
#include "ntl/model.hpp"
#include "ntl/model_select.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace ntl;
using ntl::testing::separable_blob;
using Catch::Matchers::WithinAbs;

TEST_CASE("AUC examples") {
    CHECK(auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}) == 0.75);
    CHECK(auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}) == 1.0);
    CHECK(auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, std::vector<int>{0, 0, 1, 1}) == 0.0);
    CHECK(auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, std::vector<int>{0, 1, 0, 1}) == 0.5);
    // A tie between classes counts one half.
    CHECK(auc(std::vector<double>{0.1, 0.5, 0.5}, std::vector<int>{0, 0, 1}) == 0.75);
}

TEST_CASE("AUC matches the pairwise definition") {
    Rng rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(2, 80));
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = trial % 2 ? std::round(rng.uniform(0, 5)) : rng.uniform();
            y[i] = static_cast<int>(rng.uniform_int(0, 1));
        }
        y[0] = 0;
        y[1] = 1;
        CHECK_THAT(auc(s, y), WithinAbs(oracle::pairwise_auc(s, y), 1e-12));
    }
}

TEST_CASE("AUC invariances") {
    Rng rng(5);
    std::vector<double> s(200);
    std::vector<int> y(200);
    for (std::size_t i = 0; i < s.size(); ++i) {
        y[i] = rng.uniform() < 0.3;
        s[i] = rng.normal() + y[i];
    }
    const double a = auc(s, y);
    std::vector<double> neg(s.size()), mono(s.size());
    std::vector<int> flipped(y.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        neg[i] = -s[i];
        mono[i] = std::exp(3.0 * s[i]) + 7.0;
        flipped[i] = 1 - y[i];
    }
    CHECK_THAT(auc(neg, y), WithinAbs(1.0 - a, 1e-12));
    CHECK_THAT(auc(s, flipped), WithinAbs(1.0 - a, 1e-12));
    CHECK(auc(mono, y) == a);
}

TEST_CASE("AUC errors") {
    CHECK_THROWS_AS(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), UndefinedMetric);
    CHECK_THROWS_AS(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{0, 0}), UndefinedMetric);
    CHECK_THROWS_AS(auc(std::vector<double>{0.1}, std::vector<int>{0, 1}), InvalidInput);
    CHECK_THROWS_AS(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{0, 2}), InvalidInput);
}

TEST_CASE("stratified folds partition the rows") {
    std::vector<int> y(100, 0);
    for (std::size_t i = 0; i < 33; ++i) y[i * 3] = 1;
    const auto folds = stratified_k_fold(y, 10, 7);
    REQUIRE(folds.size() == 10);
    std::set<std::size_t> seen;
    for (const auto& f : folds) {
        CHECK(f.size() == 10);
        std::size_t pos = 0;
        for (auto i : f) {
            CHECK(seen.insert(i).second);
            pos += static_cast<std::size_t>(y[i]);
        }
        CHECK(pos >= 3);
        CHECK(pos <= 4);
    }
    CHECK(seen.size() == 100);
    CHECK(stratified_k_fold(y, 10, 7) == folds);
    CHECK(stratified_k_fold(y, 10, 8) != folds);
}

TEST_CASE("stratified fold sizes differ by at most one") {
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(40, 300));
        const std::size_t k = static_cast<std::size_t>(rng.uniform_int(2, 10));
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = i % 4 == 0;
        const std::size_t n_pos = (n + 3) / 4;
        const auto folds = stratified_k_fold(y, k, static_cast<std::uint64_t>(trial));
        std::size_t lo = n, hi = 0;
        for (const auto& f : folds) {
            lo = std::min(lo, f.size());
            hi = std::max(hi, f.size());
            double pos = 0;
            for (auto i : f) pos += y[i];
            CHECK(std::abs(pos - static_cast<double>(n_pos) / static_cast<double>(k)) < 1.0);
        }
        CHECK(hi - lo <= 1);
    }
}

TEST_CASE("stratified fold errors") {
    std::vector<int> y{0, 1, 0, 1, 0, 1};
    CHECK_THROWS_AS(stratified_k_fold(y, 1, 0), ConfigError);
    CHECK_THROWS_AS(stratified_k_fold(y, 4, 0), ConfigError);
    CHECK_NOTHROW(stratified_k_fold(y, 3, 0));
}

TEST_CASE("hyperparameter sampling stays in the search space") {
    Rng rng(11);
    std::size_t small_lr = 0;
    std::set<BoostLoss> losses;
    for (int i = 0; i < 10000; ++i) {
        const auto p = sample_hyperparams(ClassifierKind::GBT, rng);
        REQUIRE_NOTHROW(validate(p));
        CHECK(*p.learning_rate >= 1e-4);
        CHECK(*p.learning_rate <= 1.0);
        if (*p.learning_rate < 0.01) ++small_lr;
        losses.insert(*p.loss);
        CHECK(*p.n_estimators == 20);
        CHECK_FALSE(p.criterion);
    }
    // Log-uniform draws put half the mass below 1e-2.
    CHECK(small_lr > 1000);
    CHECK(losses.size() == 2);

    for (int i = 0; i < 1000; ++i) {
        const auto rf = sample_hyperparams(ClassifierKind::RF, rng);
        REQUIRE_NOTHROW(validate(rf));
        CHECK(*rf.n_estimators == 20);
        CHECK(*rf.max_depth >= 1);
        CHECK(*rf.max_depth < 50);
        CHECK(*rf.max_leaves >= 2);
        CHECK(*rf.max_leaves < 1000);
        CHECK(*rf.min_samples_leaf < 1000);
        CHECK(*rf.min_samples_split < 50);
        const auto dt = sample_hyperparams(ClassifierKind::DT, rng);
        REQUIRE_NOTHROW(validate(dt));
        CHECK_FALSE(dt.learning_rate);
        CHECK_FALSE(dt.n_estimators);
        const auto svm = sample_hyperparams(ClassifierKind::LSVM, rng);
        REQUIRE_NOTHROW(validate(svm));
        CHECK(*svm.l2_reg >= 1e-3);
        CHECK(*svm.l2_reg <= 10.0);
        CHECK_FALSE(svm.max_depth);
    }
}

TEST_CASE("class weights are recomputed on each training split") {
    const auto blob = separable_blob(103, 2, 13, 2.0, 0.3);
    const auto d = make_labeled_dataset(blob.matrix, blob.labels);
    const auto folds = stratified_k_fold(d.labels, 5, 1);
    std::set<double> w1s;
    for (const auto& f : folds) {
        std::vector<std::size_t> train;
        for (std::size_t i = 0; i < d.size(); ++i)
            if (!std::binary_search(f.begin(), f.end(), i)) train.push_back(i);
        const auto sub = d.subset(train);
        const auto n1 = static_cast<double>(sub.positives());
        const auto n0 = static_cast<double>(sub.size()) - n1;
        CHECK(sub.weights.w0 == (n0 + n1) / n0);
        CHECK(sub.weights.w1 == (n0 + n1) / n1);
        w1s.insert(sub.weights.w1);
    }
    CHECK(w1s.size() > 1);
}

TEST_CASE("search smoke run") {
    const auto blob = separable_blob(80, 3, 17, 2.0);
    const auto d = make_labeled_dataset(blob.matrix, blob.labels);
    SearchOptions o;
    o.n_candidates = 1;
    o.k = 2;
    o.seed = 4;
    const auto r = run_search(d, ClassifierKind::DT, o);
    REQUIRE(r.candidates.size() == 1);
    CHECK(r.candidates[0].fold_aucs.size() == 2);
    CHECK(r.winner == std::optional<std::size_t>(0));
    const auto j = to_json(r);
    CHECK(j["schema"] == "ntl.search.v1");
    CHECK(j["winner"]["index"] == 0);
    CHECK(j["features"].size() == 3);
}

TEST_CASE("identical candidates score identically and the earliest wins") {
    const auto blob = separable_blob(120, 4, 19, 1.0);
    const auto d = make_labeled_dataset(blob.matrix, blob.labels);
    SearchOptions o;
    o.k = 3;
    o.seed = 5;
    auto p = default_params(ClassifierKind::DT);
    o.fixed_candidates = {p, p, p};
    const auto r = run_search(d, ClassifierKind::DT, o);
    CHECK(r.candidates[0].mean_auc == r.candidates[1].mean_auc);
    CHECK(r.candidates[1].mean_auc == r.candidates[2].mean_auc);
    CHECK(r.winner == std::optional<std::size_t>(0));
}

TEST_CASE("failing candidates are recorded and skipped") {
    const auto blob = separable_blob(120, 4, 23, 1.0);
    const auto d = make_labeled_dataset(blob.matrix, blob.labels);
    SearchOptions o;
    o.k = 3;
    auto bad = default_params(ClassifierKind::DT);
    bad.max_depth = 99;
    o.fixed_candidates = {bad, default_params(ClassifierKind::DT)};
    const auto r = run_search(d, ClassifierKind::DT, o);
    CHECK(r.candidates[0].failed);
    CHECK_FALSE(r.candidates[0].error.empty());
    CHECK_FALSE(r.candidates[1].failed);
    CHECK(r.winner == std::optional<std::size_t>(1));
    CHECK(to_json(r)["candidates"][0]["error"].is_string());

    o.fixed_candidates = {bad};
    const auto none = run_search(d, ClassifierKind::DT, o);
    CHECK_FALSE(none.winner);
    CHECK_THROWS_AS(none.best(), InvalidDataset);
    CHECK(to_json(none)["winner"].is_null());
}

TEST_CASE("random forest search finds a good model on a separable blob") {
    const auto blob = separable_blob(400, 5, 29, 3.0, 0.35);
    const auto d = make_labeled_dataset(blob.matrix, blob.labels);
    SearchOptions o;
    o.n_candidates = 6;
    o.k = 3;
    o.seed = 2;
    const auto r = run_search(d, ClassifierKind::RF, o);
    CHECK(r.best().mean_auc >= 0.95);
    for (const auto& c : r.candidates)
        if (!c.failed) CHECK(c.mean_auc <= r.best().mean_auc);
}

TEST_CASE("search is deterministic regardless of the worker count") {
    const auto blob = separable_blob(150, 3, 31, 1.0);
    const auto d = make_labeled_dataset(blob.matrix, blob.labels);
    SearchOptions o;
    o.n_candidates = 4;
    o.k = 3;
    o.seed = 8;
    o.threads = 1;
    const auto a = to_json(run_search(d, ClassifierKind::GBT, o)).dump();
    o.threads = 3;
    const auto b = to_json(run_search(d, ClassifierKind::GBT, o)).dump();
    CHECK(a == b);
    CHECK(job_seed(1, 0, 0) != job_seed(1, 0, 1));
    CHECK(job_seed(1, 0, 0) != job_seed(1, 1, 0));
    CHECK(job_seed(1, 0, 0) != job_seed(2, 0, 0));
}
