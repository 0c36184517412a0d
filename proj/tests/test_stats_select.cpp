#include <catch_amalgamated.hpp>

#include <numeric>

#include "ntl/error.hpp"
#include "ntl/stats_select.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace ntl;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

FeatureMatrix single_column(const std::vector<double>& v, FeatureKind kind = FeatureKind::Continuous) {
    FeatureMatrix m({{"f", FeatureFamily::GTS, kind}});
    for (std::size_t i = 0; i < v.size(); ++i) m.add_row(std::to_string(i), std::span<const double>(&v[i], 1));
    return m;
}

// n rows; `planted` columns shift with the label, `noise` columns do not.
// Half the planted columns are binary.
struct Planted {
    FeatureMatrix matrix;
    std::vector<int> labels;
};

Planted planted_matrix(std::size_t n, std::size_t planted, std::size_t noise, std::uint64_t seed) {
    std::vector<FeatureSpec> specs;
    for (std::size_t j = 0; j < planted; ++j) specs.push_back({"signal" + std::to_string(j), FeatureFamily::DIF, FeatureKind::Continuous});
    for (std::size_t j = 0; j < noise; ++j) specs.push_back({"noise" + std::to_string(j), FeatureFamily::GTS, FeatureKind::Continuous});
    Planted p{FeatureMatrix(specs), {}};
    Rng rng(seed);
    std::vector<double> row(planted + noise);
    for (std::size_t i = 0; i < n; ++i) {
        const int y = rng.uniform() < 1.0 / 3.0;
        for (std::size_t j = 0; j < planted; ++j)
            row[j] = j % 2 ? (rng.uniform() < (y ? 0.6 : 0.4) ? 1.0 : 0.0) : rng.normal() + (y ? 0.35 : 0.0);
        for (std::size_t j = planted; j < row.size(); ++j)
            row[j] = j % 3 == 0 ? (rng.uniform() < 0.5 ? 1.0 : 0.0) : rng.normal();
        p.matrix.add_row("r" + std::to_string(i), row);
        p.labels.push_back(y);
    }
    return p;
}

} // namespace

TEST_CASE("Fisher exact test reference values") {
    CHECK_THAT(fisher_exact_two_sided({5, 0, 0, 5}), WithinRel(2.0 / 252.0, 1e-12));
    CHECK_THAT(fisher_exact_two_sided({3, 7, 3, 7}), WithinAbs(1.0, 1e-12));
    CHECK(fisher_exact_two_sided({1, 0, 0, 0}) == 1.0);
    // Tea-tasting table: p = 0.4857 (two-sided).
    CHECK_THAT(fisher_exact_two_sided({3, 1, 1, 3}), WithinAbs(34.0 / 70.0, 1e-12));
    CHECK_THROWS_AS(fisher_exact_two_sided({-1, 2, 3, 4}), InvalidInput);
    CHECK_THROWS_AS(fisher_exact_two_sided({0, 0, 0, 0}), InvalidInput);
}

TEST_CASE("Fisher exact test agrees with full enumeration") {
    Rng rng(1);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::int64_t n = rng.uniform_int(1, 40);
        std::int64_t cell[4] = {0, 0, 0, 0};
        for (std::int64_t i = 0; i < n; ++i) ++cell[rng.index(4)];
        const double p = fisher_exact_two_sided({cell[0], cell[1], cell[2], cell[3]});
        CHECK_THAT(p, WithinAbs(oracle::fisher_two_sided(cell[0], cell[1], cell[2], cell[3]), 1e-10));
    }
}

TEST_CASE("Fisher exact test symmetries") {
    Rng rng(2);
    for (int trial = 0; trial < 500; ++trial) {
        const auto a = rng.uniform_int(0, 15), b = rng.uniform_int(0, 15), c = rng.uniform_int(0, 15),
                   d = rng.uniform_int(0, 15) + 1;
        const double p = fisher_exact_two_sided({a, b, c, d});
        CHECK_THAT(fisher_exact_two_sided({a, c, b, d}), WithinAbs(p, 1e-12)); // transpose
        CHECK_THAT(fisher_exact_two_sided({d, c, b, a}), WithinAbs(p, 1e-12)); // swap rows and columns
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("KS statistic reference values") {
    const std::vector<double> s{1, 2, 3}, a{1, 2}, b{3, 4}, c{1, 3}, d{2, 4};
    CHECK(ks_two_sample(s, s).statistic == 0.0);
    CHECK(ks_two_sample(s, s).p_value == 1.0);
    CHECK(ks_two_sample(a, b).statistic == 1.0);
    CHECK(ks_two_sample(c, d).statistic == 0.5);
    CHECK_THROWS_AS(ks_two_sample({}, s), InvalidInput);
    CHECK_THROWS_AS(ks_two_sample(s, {}), InvalidInput);
}

TEST_CASE("KS statistic agrees with the ECDF supremum") {
    Rng rng(3);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<double> a(static_cast<std::size_t>(rng.uniform_int(1, 50)));
        std::vector<double> b(static_cast<std::size_t>(rng.uniform_int(1, 50)));
        const bool ties = trial % 2 == 0;
        for (auto& v : a) v = ties ? static_cast<double>(rng.uniform_int(0, 8)) : rng.normal();
        for (auto& v : b) v = ties ? static_cast<double>(rng.uniform_int(0, 8)) : rng.normal(0.3, 1.0);
        CHECK_THAT(ks_two_sample(a, b).statistic, WithinAbs(oracle::ks_statistic(a, b), 1e-12));
    }
}

TEST_CASE("KS is symmetric and rank based") {
    Rng rng(4);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> a(20), b(27);
        for (auto& v : a) v = rng.uniform(0.1, 5);
        for (auto& v : b) v = rng.uniform(0.1, 6);
        const auto r = ks_two_sample(a, b);
        const auto s = ks_two_sample(b, a);
        CHECK(r.statistic == s.statistic);
        CHECK(r.p_value == s.p_value);
        std::vector<double> ta = a, tb = b;
        for (auto& v : ta) v = std::exp(v) + v * v * v;
        for (auto& v : tb) v = std::exp(v) + v * v * v;
        CHECK_THAT(ks_two_sample(ta, tb).statistic, WithinAbs(r.statistic, 1e-15));
    }
}

TEST_CASE("Kolmogorov survival function") {
    CHECK(kolmogorov_survival(0.0) == 1.0);
    CHECK_THAT(kolmogorov_survival(0.5), WithinAbs(0.9639452436648751, 1e-12));
    CHECK_THAT(kolmogorov_survival(1.0), WithinAbs(0.26999967167735456, 1e-12));
    CHECK_THAT(kolmogorov_survival(1.36), WithinAbs(0.049485876755377876, 1e-12));
    CHECK_THAT(kolmogorov_survival(2.0), WithinAbs(6.709252557796953e-4, 1e-12));
    // Both series agree where they meet.
    CHECK_THAT(kolmogorov_survival(1.18 - 1e-12), WithinAbs(kolmogorov_survival(1.18), 1e-10));
    double prev = 1.0;
    for (double l = 0.05; l < 4.0; l += 0.05) {
        const double q = kolmogorov_survival(l);
        CHECK(q <= prev);
        prev = q;
    }
}

TEST_CASE("Benjamini-Yekutieli adjustment") {
    const std::vector<double> p{0.01, 0.04, 0.03, 0.5, 0.001};
    const auto adj = benjamini_yekutieli(p);
    // Oracle: step-up with the harmonic factor, computed directly.
    const double m = 5, h = 1 + 1.0 / 2 + 1.0 / 3 + 1.0 / 4 + 1.0 / 5;
    std::vector<double> sorted = p;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < p.size(); ++i) {
        double q = 1.0;
        const auto rank = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), p[i]) - sorted.begin());
        for (std::size_t j = rank; j < sorted.size(); ++j) q = std::min(q, sorted[j] * m * h / static_cast<double>(j + 1));
        CHECK_THAT(adj[i], WithinRel(q, 1e-12));
        CHECK(adj[i] >= p[i]);
    }
    CHECK(benjamini_yekutieli({}).empty());
}

TEST_CASE("select_features basic decisions") {
    std::vector<int> y;
    std::vector<double> same, flat, noise;
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        y.push_back(i % 3 == 0);
        same.push_back(y.back());
        flat.push_back(4.2);
        noise.push_back(rng.normal());
    }
    FeatureMatrix m({{"same", FeatureFamily::GTS, FeatureKind::Binary},
                     {"flat", FeatureFamily::AVG, FeatureKind::Continuous},
                     {"noise", FeatureFamily::DIF, FeatureKind::Continuous}});
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double row[3] = {same[i], flat[i], noise[i]};
        m.add_row(std::to_string(i), row);
    }
    const auto r = select_features(m, y);
    REQUIRE(r.features.size() == 3);
    CHECK(r.features[0].test == TestKind::Fisher);
    CHECK(r.features[0].retained);
    CHECK(r.features[0].p_value < 1e-30);
    CHECK_FALSE(r.features[1].retained);
    CHECK(r.features[1].p_value == 1.0);
    CHECK(r.features[2].test == TestKind::KolmogorovSmirnov);
    CHECK_FALSE(r.features[2].retained);
    CHECK(r.counts.at(FeatureFamily::GTS).before == 1);
    CHECK(r.counts.at(FeatureFamily::GTS).after == 1);
    CHECK(r.counts.at(FeatureFamily::AVG).after == 0);
    CHECK(r.retained_names() == std::vector<std::string>{"GTS:same"});

    CHECK_THROWS_AS(select_features(m, std::vector<int>(200, 1)), InvalidDataset);
    SelectionOptions bad;
    bad.alpha = 1.5;
    CHECK_THROWS_AS(select_features(m, y, bad), InvalidInput);
}

TEST_CASE("columns with two values use Fisher whatever their declared kind") {
    std::vector<double> v;
    std::vector<int> y;
    for (int i = 0; i < 100; ++i) {
        y.push_back(i % 2);
        v.push_back(i % 2 ? 7.5 : -1.0);
    }
    const auto r = select_features(single_column(v), y);
    CHECK(r.features[0].test == TestKind::Fisher);
    CHECK(r.features[0].retained);
}

TEST_CASE("selection keeps planted features and drops noise") {
    const auto p = planted_matrix(2000, 10, 200, 99);
    const auto r = select_features(p.matrix, p.labels);
    std::size_t planted_kept = 0, noise_dropped = 0;
    for (std::size_t j = 0; j < r.features.size(); ++j) {
        if (j < 10) planted_kept += r.features[j].retained;
        else noise_dropped += !r.features[j].retained;
    }
    CHECK(planted_kept >= 9);
    CHECK(static_cast<double>(noise_dropped) >= 0.95 * 200);
}

TEST_CASE("lowering alpha never grows the retained set") {
    const auto p = planted_matrix(600, 10, 40, 5);
    std::vector<std::string> prev;
    bool first = true;
    for (double alpha : {0.5, 0.2, 0.05, 0.01, 1e-4, 1e-8}) {
        SelectionOptions o;
        o.alpha = alpha;
        const auto kept = select_features(p.matrix, p.labels, o).retained_names();
        if (!first)
            for (const auto& k : kept) CHECK(std::find(prev.begin(), prev.end(), k) != prev.end());
        prev = kept;
        first = false;
    }
}

TEST_CASE("selection is deterministic and round-trips through JSON") {
    const auto p = planted_matrix(400, 6, 20, 8);
    SelectionOptions one, many;
    one.threads = 1;
    many.threads = 4;
    const auto a = select_features(p.matrix, p.labels, one);
    const auto b = select_features(p.matrix, p.labels, many);
    CHECK(to_json(a).dump() == to_json(b).dump());
    const auto back = selection_report_from_json(to_json(a));
    CHECK(to_json(back).dump() == to_json(a).dump());
    CHECK(to_json(a)["schema"] == "ntl.selection.v1");

    SelectionOptions raw;
    raw.correction = Correction::None;
    const auto r = select_features(p.matrix, p.labels, raw);
    for (const auto& f : r.features) CHECK(f.adjusted_p == f.p_value);
}
