#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ntl/core_model.hpp"

namespace ntl {

/// Recorded in matrix and model artifacts; bump when any extractor changes.
inline constexpr std::string_view kCatalogueVersion = "ntl-features-1";

/// Ordered, versioned list of every column produced for a window length.
/// Order: intra-year differences, seasonal differences, fixed-interval
/// (K = 3, 6, 12), daily averages, then the generic time-series catalogue.
class FeatureCatalogue {
public:
    explicit FeatureCatalogue(int months = kDefaultWindowMonths);

    int months() const noexcept { return months_; }
    const std::vector<FeatureSpec>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    std::size_t count(FeatureFamily family) const;
    std::string_view version() const noexcept { return kCatalogueVersion; }

private:
    int months_;
    std::vector<FeatureSpec> entries_;
};

/// Names and kinds of the generic time-series extractors, in output order.
const std::vector<FeatureSpec>& generic_catalogue();

// Difference family. Each returns an empty vector when the window is too
// short for the family.

/// C_d - C_{d-12} for d = 12..N-1.
std::vector<double> intra_year_difference(std::span<const double> c);
/// C_d - mean(C_{d-13}, C_{d-12}, C_{d-11}) for d = 13..N-1.
std::vector<double> intra_year_seasonal_difference(std::span<const double> c);
/// C_d - mean(C_{d-K}..C_{d-1}) for d = 12..N-1.
std::vector<double> fixed_interval(std::span<const double> c, int k);

/// C_d / (R_d - R_{d-1}) in kWh/day for d = 1..N-1, where gap_days[d] is the
/// day count of interval d. Throws ValidationError on a non-positive gap.
std::vector<double> daily_average(std::span<const double> c, std::span<const int> gap_days);
std::vector<double> daily_average(const ConsumptionWindow& w);

/// Generic catalogue values in generic_catalogue() order.
std::vector<double> generic_time_series_features(std::span<const double> c);

/// Definitional autocorrelation at `lag` (0 for a zero-variance series).
double autocorrelation(std::span<const double> c, std::size_t lag);

/// All catalogue columns for one window.
std::vector<double> extract_features(const ConsumptionWindow& w, const FeatureCatalogue& catalogue);
FeatureVector feature_vector(const ConsumptionWindow& w, const FeatureCatalogue& catalogue);

/// Rows follow the input order. Throws InvalidInput when a window's length
/// differs from `months`.
FeatureMatrix build_feature_matrix(std::span<const ConsumptionWindow> windows, int months = kDefaultWindowMonths,
                                   unsigned threads = 0);

/// Keeps the columns whose family is in `families`.
FeatureMatrix filter_families(const FeatureMatrix& m, std::span<const FeatureFamily> families);

/// CSV with header `customer_id,<FAMILY:name>...`.
void write_matrix_csv(std::ostream& out, const FeatureMatrix& m);
void write_matrix_csv(const std::filesystem::path& path, const FeatureMatrix& m);
FeatureMatrix read_matrix_csv(std::istream& in);
FeatureMatrix read_matrix_csv(const std::filesystem::path& path);

/// `customer_id,label`.
void write_labels_csv(std::ostream& out, const std::vector<std::string>& ids, const std::vector<int>& labels);
void write_labels_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                      const std::vector<int>& labels);
/// Returns labels aligned with `row_ids`; throws InvalidDataset when a row
/// has no label.
std::vector<int> read_labels_csv(const std::filesystem::path& path, const std::vector<std::string>& row_ids);
std::vector<int> read_labels_csv(std::istream& in, const std::vector<std::string>& row_ids);

} // namespace ntl
