#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ntl/core_model.hpp"

namespace ntl {

/// 2x2 contingency table [[a, b], [c, d]].
struct Table2x2 {
    std::int64_t a = 0, b = 0, c = 0, d = 0;
};

/// Two-sided Fisher exact test: the summed probability of every table with
/// the observed margins that is no more likely than the observed one
/// (relative tolerance 1e-7 on that comparison). Evaluated in log space.
/// Throws InvalidInput on a negative cell or an empty table.
double fisher_exact_two_sided(const Table2x2& t);

struct KsResult {
    double statistic = 0.0; // D
    double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test. D is exact; the p-value is the
/// asymptotic Kolmogorov tail at sqrt(n_a n_b / (n_a + n_b)) * D.
/// Throws InvalidInput on an empty sample.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// P(K > lambda) for the limiting Kolmogorov distribution.
double kolmogorov_survival(double lambda);

enum class Correction { None, BenjaminiYekutieli };
std::string_view to_string(Correction c);
std::optional<Correction> parse_correction(std::string_view s);

/// Benjamini-Yekutieli adjusted p-values, in input order.
std::vector<double> benjamini_yekutieli(std::span<const double> p);

enum class TestKind { Fisher, KolmogorovSmirnov };
std::string_view to_string(TestKind t);

struct FeatureTest {
    std::string name; // qualified
    FeatureFamily family = FeatureFamily::GTS;
    FeatureKind kind = FeatureKind::Continuous;
    TestKind test = TestKind::KolmogorovSmirnov;
    double p_value = 1.0;
    double adjusted_p = 1.0;
    bool retained = false;
};

struct FamilyTally {
    std::size_t before = 0;
    std::size_t after = 0;
};

struct SelectionReport {
    std::vector<FeatureTest> features; // matrix column order
    double alpha = 0.05;
    Correction correction = Correction::BenjaminiYekutieli;
    std::map<FeatureFamily, FamilyTally> counts;
    std::string catalogue_version;

    std::vector<std::string> retained_names() const;
};

struct SelectionOptions {
    double alpha = 0.05;
    Correction correction = Correction::BenjaminiYekutieli;
    unsigned threads = 0;
};

/// Tests every column against the labels: columns with at most two distinct
/// values go through Fisher, the rest through KS. Zero-variance columns are
/// discarded with p = 1. Throws InvalidDataset on single-class labels and
/// InvalidInput on a bad alpha or a row/label mismatch.
SelectionReport select_features(const FeatureMatrix& matrix, std::span<const int> labels,
                                const SelectionOptions& options = {});

nlohmann::json to_json(const SelectionReport& report);
SelectionReport selection_report_from_json(const nlohmann::json& j);
void write_selection_report(const std::filesystem::path& path, const SelectionReport& report);
SelectionReport read_selection_report(const std::filesystem::path& path);

} // namespace ntl
