#include "ntl/core_model.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

namespace ntl {

namespace {

template <typename T>
bool parse_int(std::string_view s, T& out) {
    if (s.empty()) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

} // namespace

std::optional<Date> parse_date(std::string_view text) {
    int y = 0;
    unsigned m = 0, d = 1;
    if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
        if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), m) ||
            !parse_int(text.substr(8, 2), d))
            return std::nullopt;
    } else if (text.size() == 7 && text[4] == '-') {
        if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), m))
            return std::nullopt;
    } else {
        return std::nullopt;
    }
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return Date{ymd};
}

std::string format_date(Date d) {
    std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

int month_index(Date d) {
    std::chrono::year_month_day ymd{d};
    return static_cast<int>(ymd.year()) * 12 + static_cast<int>(static_cast<unsigned>(ymd.month())) - 1;
}

ConsumptionWindow::ConsumptionWindow(std::string customer_id, std::vector<Date> reading_dates,
                                     std::vector<double> consumption, Date label_date)
    : customer_id_(std::move(customer_id)),
      reading_dates_(std::move(reading_dates)),
      consumption_(std::move(consumption)),
      label_date_(label_date) {
    if (consumption_.empty())
        throw ValidationError("window for '" + customer_id_ + "' has no consumption values");
    if (reading_dates_.size() != consumption_.size() + 1)
        throw ValidationError("window for '" + customer_id_ + "' needs N+1 reading dates for N values");
    for (std::size_t i = 1; i < reading_dates_.size(); ++i) {
        if ((reading_dates_[i] - reading_dates_[i - 1]).count() < 1)
            throw ValidationError("window for '" + customer_id_ + "' has non-increasing reading dates");
    }
    for (double c : consumption_) {
        if (!(c >= 0.0))
            throw ValidationError("window for '" + customer_id_ + "' has negative consumption");
    }
    if (label_date_ < reading_dates_.back())
        throw ValidationError("window for '" + customer_id_ + "' extends past its label date");
}

int ConsumptionWindow::gap_days(int d) const {
    return static_cast<int>((reading_dates_.at(d + 1) - reading_dates_.at(d)).count());
}

std::string_view to_string(FeatureFamily f) {
    switch (f) {
    case FeatureFamily::DIF: return "DIF";
    case FeatureFamily::AVG: return "AVG";
    case FeatureFamily::GTS: return "GTS";
    }
    return "?";
}

std::string_view to_string(FeatureKind k) {
    return k == FeatureKind::Binary ? "binary" : "continuous";
}

std::optional<FeatureFamily> parse_family(std::string_view s) {
    if (s == "DIF") return FeatureFamily::DIF;
    if (s == "AVG") return FeatureFamily::AVG;
    if (s == "GTS") return FeatureFamily::GTS;
    return std::nullopt;
}

std::string FeatureSpec::qualified() const {
    std::string out{to_string(family)};
    out += ':';
    out += name;
    return out;
}

FeatureMatrix::FeatureMatrix(std::vector<FeatureSpec> columns) : columns_(std::move(columns)) {}

void FeatureMatrix::add_row(std::string row_id, std::span<const double> values) {
    if (values.size() != columns_.size())
        throw InvalidInput("row width " + std::to_string(values.size()) + " does not match " +
                           std::to_string(columns_.size()) + " columns");
    row_ids_.push_back(std::move(row_id));
    values_.insert(values_.end(), values.begin(), values.end());
}

std::vector<double> FeatureMatrix::column(std::size_t c) const {
    std::vector<double> out(rows());
    for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, c);
    return out;
}

std::vector<std::string> FeatureMatrix::qualified_names() const {
    std::vector<std::string> out;
    out.reserve(columns_.size());
    for (const auto& c : columns_) out.push_back(c.qualified());
    return out;
}

std::optional<std::size_t> FeatureMatrix::find(std::string_view qualified) const {
    for (std::size_t c = 0; c < columns_.size(); ++c)
        if (columns_[c].qualified() == qualified) return c;
    return std::nullopt;
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::size_t> cols) const {
    std::vector<FeatureSpec> specs;
    specs.reserve(cols.size());
    for (auto c : cols) specs.push_back(columns_.at(c));
    FeatureMatrix out(std::move(specs));
    out.row_ids_ = row_ids_;
    out.values_.reserve(rows() * cols.size());
    for (std::size_t r = 0; r < rows(); ++r)
        for (auto c : cols) out.values_.push_back(at(r, c));
    return out;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows_sel) const {
    FeatureMatrix out(columns_);
    out.row_ids_.reserve(rows_sel.size());
    out.values_.reserve(rows_sel.size() * cols());
    for (auto r : rows_sel) {
        out.row_ids_.push_back(row_ids_.at(r));
        auto v = row(r);
        out.values_.insert(out.values_.end(), v.begin(), v.end());
    }
    return out;
}

FeatureVector FeatureMatrix::row_vector(std::size_t r) const {
    FeatureVector fv;
    for (std::size_t c = 0; c < cols(); ++c) {
        auto q = columns_[c].qualified();
        fv.values.emplace(q, at(r, c));
        fv.specs.emplace(std::move(q), columns_[c]);
    }
    return fv;
}

ClassWeights class_weights(std::size_t n_neg, std::size_t n_pos) {
    if (n_neg == 0 || n_pos == 0)
        throw InvalidDataset("class weights need both classes present (n_neg=" + std::to_string(n_neg) +
                             ", n_pos=" + std::to_string(n_pos) + ")");
    const double total = static_cast<double>(n_neg + n_pos);
    return {total / static_cast<double>(n_neg), total / static_cast<double>(n_pos)};
}

std::size_t LabeledDataset::positives() const noexcept {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

std::vector<double> LabeledDataset::sample_weights() const {
    std::vector<double> w(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) w[i] = weights.of(labels[i]);
    return w;
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const {
    std::vector<int> y;
    y.reserve(rows.size());
    for (auto r : rows) y.push_back(labels.at(r));
    return make_labeled_dataset(matrix.select_rows(rows), std::move(y));
}

LabeledDataset make_labeled_dataset(FeatureMatrix matrix, std::vector<int> labels) {
    if (matrix.rows() != labels.size())
        throw InvalidDataset("matrix has " + std::to_string(matrix.rows()) + " rows but " +
                             std::to_string(labels.size()) + " labels were given");
    std::size_t pos = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw InvalidDataset("labels must be 0 or 1");
        pos += static_cast<std::size_t>(y);
    }
    auto w = class_weights(labels.size() - pos, pos);
    return {std::move(matrix), std::move(labels), w};
}

std::string_view to_string(Status s) {
    switch (s) {
    case Status::Regular: return "regular";
    case Status::Suspicious: return "suspicious";
    case Status::Irregular: return "irregular";
    }
    return "?";
}

std::string_view to_string(Decision d) {
    switch (d) {
    case Decision::None: return "none";
    case Decision::Inspect: return "inspect";
    case Decision::Skip: return "skip";
    }
    return "?";
}

std::optional<Decision> parse_decision(std::string_view s) {
    if (s == "inspect") return Decision::Inspect;
    if (s == "skip") return Decision::Skip;
    return std::nullopt;
}

FamilyCounts family_counts(int months) {
    FamilyCounts fc;
    fc.intra_year = std::max(0, months - 12);
    fc.intra_year_seasonal = std::max(0, months - 13);
    fc.fixed_interval = 3 * std::max(0, months - 12);
    fc.daily_average = std::max(0, months - 1);
    return fc;
}

} // namespace ntl
