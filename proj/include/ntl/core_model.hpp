#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ntl/error.hpp"

namespace ntl {

/// Length of the consumption window used when nothing else is configured.
inline constexpr int kDefaultWindowMonths = 24;

using Date = std::chrono::sys_days;

/// Parses `YYYY-MM-DD`; `YYYY-MM` is accepted as the first day of that month.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date d);

/// Calendar-month ordinal (year * 12 + month - 1), used for completeness checks.
int month_index(Date d);

struct Reading {
    Date date;
    double consumption_kwh = 0.0;

    bool operator==(const Reading&) const = default;
};

/// A customer's N-month consumption series C_0..C_{N-1} plus the N+1 reading
/// dates bounding those intervals. reading_dates[d + 1] closes interval d, so
/// the day count of interval d is reading_dates[d + 1] - reading_dates[d].
class ConsumptionWindow {
public:
    /// Throws ValidationError when any invariant is violated.
    ConsumptionWindow(std::string customer_id, std::vector<Date> reading_dates,
                      std::vector<double> consumption, Date label_date);

    const std::string& customer_id() const noexcept { return customer_id_; }
    std::span<const Date> reading_dates() const noexcept { return reading_dates_; }
    std::span<const double> consumption() const noexcept { return consumption_; }
    Date label_date() const noexcept { return label_date_; }
    int months() const noexcept { return static_cast<int>(consumption_.size()); }

    /// Days between the readings bounding interval d.
    int gap_days(int d) const;

    bool operator==(const ConsumptionWindow&) const = default;

private:
    std::string customer_id_;
    std::vector<Date> reading_dates_;
    std::vector<double> consumption_;
    Date label_date_;
};

struct InspectionLabel {
    std::string customer_id;
    int outcome = 0; // 1 = NTL found
    Date inspection_date;

    bool operator==(const InspectionLabel&) const = default;
};

enum class FeatureFamily { DIF, AVG, GTS };
enum class FeatureKind { Binary, Continuous };

std::string_view to_string(FeatureFamily f);
std::string_view to_string(FeatureKind k);
std::optional<FeatureFamily> parse_family(std::string_view s);

struct FeatureSpec {
    std::string name; // unqualified, e.g. "intra_year_d12"
    FeatureFamily family = FeatureFamily::GTS;
    FeatureKind kind = FeatureKind::Continuous;

    /// "DIF:intra_year_d12" -- the form used in CSV headers and model artifacts.
    std::string qualified() const;

    bool operator==(const FeatureSpec&) const = default;
};

/// Named feature values for one customer, keyed by qualified name.
struct FeatureVector {
    std::map<std::string, double> values;
    std::map<std::string, FeatureSpec> specs;
};

/// Dense customers x features matrix, row-major.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    explicit FeatureMatrix(std::vector<FeatureSpec> columns);

    void add_row(std::string row_id, std::span<const double> values);

    std::size_t rows() const noexcept { return row_ids_.size(); }
    std::size_t cols() const noexcept { return columns_.size(); }

    double at(std::size_t r, std::size_t c) const { return values_[r * columns_.size() + c]; }
    std::span<const double> row(std::size_t r) const {
        return {values_.data() + r * columns_.size(), columns_.size()};
    }
    std::vector<double> column(std::size_t c) const;

    const std::vector<FeatureSpec>& columns() const noexcept { return columns_; }
    const std::vector<std::string>& row_ids() const noexcept { return row_ids_; }
    std::vector<std::string> qualified_names() const;

    /// Column index by qualified name; nullopt when absent.
    std::optional<std::size_t> find(std::string_view qualified) const;

    FeatureMatrix select_columns(std::span<const std::size_t> cols) const;
    FeatureMatrix select_rows(std::span<const std::size_t> rows) const;

    FeatureVector row_vector(std::size_t r) const;

    bool operator==(const FeatureMatrix&) const = default;

private:
    std::vector<FeatureSpec> columns_;
    std::vector<std::string> row_ids_;
    std::vector<double> values_;
};

struct ClassWeights {
    double w0 = 1.0;
    double w1 = 1.0;

    double of(int label) const noexcept { return label ? w1 : w0; }
};

/// Inverse-prevalence weights: w_c = (n_neg + n_pos) / n_c.
/// Throws InvalidDataset when either class is empty.
ClassWeights class_weights(std::size_t n_neg, std::size_t n_pos);

struct LabeledDataset {
    FeatureMatrix matrix;
    std::vector<int> labels;
    ClassWeights weights;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t positives() const noexcept;

    /// Per-row class weight.
    std::vector<double> sample_weights() const;

    /// Rows subset with class weights recomputed on that subset.
    LabeledDataset subset(std::span<const std::size_t> rows) const;
};

/// Builds a dataset and its class weights. Throws InvalidDataset on a
/// row/label count mismatch, a non-binary label or a missing class.
LabeledDataset make_labeled_dataset(FeatureMatrix matrix, std::vector<int> labels);

enum class Status { Regular, Suspicious, Irregular };
enum class Decision { None, Inspect, Skip };

std::string_view to_string(Status s);
std::string_view to_string(Decision d);
std::optional<Decision> parse_decision(std::string_view s);

struct GeoPoint {
    double latitude = 0.0;
    double longitude = 0.0;

    bool operator==(const GeoPoint&) const = default;
};

struct CustomerGeo {
    std::string customer_id;
    GeoPoint location;
    std::string neighborhood_id;

    bool operator==(const CustomerGeo&) const = default;
};

struct CustomerRecord {
    std::string customer_id;
    GeoPoint location;
    std::string neighborhood_id;
    double score = 0.0;
    Status status = Status::Regular;
    Decision decision = Decision::None;
};

/// Closed-form family sizes for a window of N months.
struct FamilyCounts {
    int intra_year = 0;
    int intra_year_seasonal = 0;
    int fixed_interval = 0;
    int daily_average = 0;

    int dif() const noexcept { return intra_year + intra_year_seasonal + fixed_interval; }
    int avg() const noexcept { return daily_average; }
};

FamilyCounts family_counts(int months);

} // namespace ntl
