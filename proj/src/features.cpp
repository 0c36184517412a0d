#include "ntl/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include "ntl/parallel.hpp"
#include "ntl/text.hpp"

namespace ntl {

namespace {

// Shared intermediate values for the generic extractors.
struct SeriesStats {
    std::span<const double> x;
    std::vector<double> sorted;
    double n = 0.0;
    double mean = 0.0;
    double m2 = 0.0; // population central moments
    double m3 = 0.0;
    double m4 = 0.0;
    double median = 0.0;

    explicit SeriesStats(std::span<const double> series) : x(series), sorted(series.begin(), series.end()) {
        std::sort(sorted.begin(), sorted.end());
        n = static_cast<double>(x.size());
        mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
        for (double v : x) {
            const double d = v - mean;
            m2 += d * d;
            m3 += d * d * d;
            m4 += d * d * d * d;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        median = quantile(0.5);
    }

    // Linear interpolation between order statistics.
    double quantile(double q) const {
        const double pos = q * (n - 1.0);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, sorted.size() - 1);
        return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    }
    double min() const { return sorted.front(); }
    double max() const { return sorted.back(); }
};

std::size_t count_if_value(std::span<const double> x, const std::function<bool(double)>& pred) {
    return static_cast<std::size_t>(std::count_if(x.begin(), x.end(), pred));
}

double longest_strike(std::span<const double> x, const std::function<bool(double)>& pred) {
    std::size_t best = 0, run = 0;
    for (double v : x) {
        run = pred(v) ? run + 1 : 0;
        best = std::max(best, run);
    }
    return static_cast<double>(best);
}

double skewness(const SeriesStats& s) {
    if (s.n < 3 || s.m2 <= 0.0) return 0.0;
    const double g1 = s.m3 / std::pow(s.m2, 1.5);
    return g1 * std::sqrt(s.n * (s.n - 1.0)) / (s.n - 2.0);
}

double kurtosis(const SeriesStats& s) {
    if (s.n < 4 || s.m2 <= 0.0) return 0.0;
    const double g2 = s.m4 / (s.m2 * s.m2) - 3.0;
    return ((s.n + 1.0) * g2 + 6.0) * (s.n - 1.0) / ((s.n - 2.0) * (s.n - 3.0));
}

double fft_abs(std::span<const double> x, std::size_t k) {
    std::complex<double> acc{0.0, 0.0};
    const double n = static_cast<double>(x.size());
    for (std::size_t t = 0; t < x.size(); ++t)
        acc += x[t] * std::polar(1.0, -2.0 * M_PI * static_cast<double>(k * t) / n);
    return std::abs(acc);
}

struct TrendFit {
    double slope = 0.0, intercept = 0.0, r = 0.0;
};

TrendFit linear_trend(std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    const double tbar = (n - 1.0) / 2.0;
    const double ybar = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double stt = 0.0, sty = 0.0, syy = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        const double dt = static_cast<double>(t) - tbar;
        const double dy = x[t] - ybar;
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    TrendFit f;
    f.slope = stt > 0.0 ? sty / stt : 0.0;
    f.intercept = ybar - f.slope * tbar;
    f.r = (stt > 0.0 && syy > 0.0) ? sty / std::sqrt(stt * syy) : 0.0;
    return f;
}

double first_location(std::span<const double> x, double target) {
    auto it = std::find(x.begin(), x.end(), target);
    return static_cast<double>(it - x.begin()) / static_cast<double>(x.size());
}

double last_location(std::span<const double> x, double target) {
    for (std::size_t i = x.size(); i > 0; --i)
        if (x[i - 1] == target) return static_cast<double>(i) / static_cast<double>(x.size());
    return 0.0;
}

struct GenericExtractor {
    FeatureSpec spec;
    std::function<double(const SeriesStats&)> fn;
};

GenericExtractor gts(std::string name, std::function<double(const SeriesStats&)> fn,
                     FeatureKind kind = FeatureKind::Continuous) {
    return {FeatureSpec{std::move(name), FeatureFamily::GTS, kind}, std::move(fn)};
}

const std::vector<GenericExtractor>& generic_extractors() {
    using K = FeatureKind;
    static const std::vector<GenericExtractor> table = [] {
        std::vector<GenericExtractor> t;
        // summary statistics
        t.push_back(gts("sum_values", [](const SeriesStats& s) { return s.mean * s.n; }));
        t.push_back(gts("mean", [](const SeriesStats& s) { return s.mean; }));
        t.push_back(gts("median", [](const SeriesStats& s) { return s.median; }));
        t.push_back(gts("minimum", [](const SeriesStats& s) { return s.min(); }));
        t.push_back(gts("maximum", [](const SeriesStats& s) { return s.max(); }));
        t.push_back(gts("variance", [](const SeriesStats& s) { return s.m2; }));
        t.push_back(gts("standard_deviation", [](const SeriesStats& s) { return std::sqrt(s.m2); }));
        t.push_back(gts("skewness", skewness));
        t.push_back(gts("kurtosis", kurtosis));
        t.push_back(gts("quantile_q10", [](const SeriesStats& s) { return s.quantile(0.1); }));
        t.push_back(gts("quantile_q90", [](const SeriesStats& s) { return s.quantile(0.9); }));
        t.push_back(gts("variation_coefficient", [](const SeriesStats& s) {
            return s.mean != 0.0 ? std::sqrt(s.m2) / s.mean : 0.0;
        }));
        // sample distribution
        t.push_back(gts("abs_energy", [](const SeriesStats& s) {
            return std::inner_product(s.x.begin(), s.x.end(), s.x.begin(), 0.0);
        }));
        t.push_back(gts("count_above_median", [](const SeriesStats& s) {
            return static_cast<double>(count_if_value(s.x, [&](double v) { return v > s.median; }));
        }));
        t.push_back(gts("count_below_median", [](const SeriesStats& s) {
            return static_cast<double>(count_if_value(s.x, [&](double v) { return v < s.median; }));
        }));
        t.push_back(gts("count_above_mean", [](const SeriesStats& s) {
            return static_cast<double>(count_if_value(s.x, [&](double v) { return v > s.mean; }));
        }));
        t.push_back(gts("count_below_mean", [](const SeriesStats& s) {
            return static_cast<double>(count_if_value(s.x, [&](double v) { return v < s.mean; }));
        }));
        for (double r : {0.25, 0.5}) {
            std::string name = r == 0.25 ? "symmetry_looking_r0_25" : "symmetry_looking_r0_5";
            t.push_back(gts(std::move(name), [r](const SeriesStats& s) {
                return std::abs(s.mean - s.median) < r * (s.max() - s.min()) ? 1.0 : 0.0;
            }, K::Binary));
        }
        t.push_back(gts("ratio_distinct_values", [](const SeriesStats& s) {
            std::size_t d = s.sorted.empty() ? 0 : 1;
            for (std::size_t i = 1; i < s.sorted.size(); ++i) d += s.sorted[i] != s.sorted[i - 1];
            return static_cast<double>(d) / s.n;
        }));
        t.push_back(gts("has_duplicate_max", [](const SeriesStats& s) {
            return s.sorted.size() > 1 && s.sorted[s.sorted.size() - 2] == s.max() ? 1.0 : 0.0;
        }, K::Binary));
        t.push_back(gts("has_duplicate_min", [](const SeriesStats& s) {
            return s.sorted.size() > 1 && s.sorted[1] == s.min() ? 1.0 : 0.0;
        }, K::Binary));
        t.push_back(gts("variance_larger_than_std", [](const SeriesStats& s) {
            return s.m2 > std::sqrt(s.m2) ? 1.0 : 0.0;
        }, K::Binary));
        t.push_back(gts("first_location_of_maximum", [](const SeriesStats& s) { return first_location(s.x, s.max()); }));
        t.push_back(gts("first_location_of_minimum", [](const SeriesStats& s) { return first_location(s.x, s.min()); }));
        t.push_back(gts("last_location_of_maximum", [](const SeriesStats& s) { return last_location(s.x, s.max()); }));
        t.push_back(gts("last_location_of_minimum", [](const SeriesStats& s) { return last_location(s.x, s.min()); }));
        // observed dynamics
        t.push_back(gts("longest_strike_above_mean", [](const SeriesStats& s) {
            return longest_strike(s.x, [&](double v) { return v > s.mean; });
        }));
        t.push_back(gts("longest_strike_below_mean", [](const SeriesStats& s) {
            return longest_strike(s.x, [&](double v) { return v < s.mean; });
        }));
        t.push_back(gts("mean_abs_change", [](const SeriesStats& s) {
            double acc = 0.0;
            for (std::size_t i = 1; i < s.x.size(); ++i) acc += std::abs(s.x[i] - s.x[i - 1]);
            return acc / (s.n - 1.0);
        }));
        t.push_back(gts("mean_change", [](const SeriesStats& s) {
            return (s.x.back() - s.x.front()) / (s.n - 1.0);
        }));
        t.push_back(gts("absolute_sum_of_changes", [](const SeriesStats& s) {
            double acc = 0.0;
            for (std::size_t i = 1; i < s.x.size(); ++i) acc += std::abs(s.x[i] - s.x[i - 1]);
            return acc;
        }));
        t.push_back(gts("mean_second_derivative_central", [](const SeriesStats& s) {
            if (s.x.size() < 3) return 0.0;
            double acc = 0.0;
            for (std::size_t i = 1; i + 1 < s.x.size(); ++i) acc += (s.x[i + 1] - 2.0 * s.x[i] + s.x[i - 1]) / 2.0;
            return acc / (s.n - 2.0);
        }));
        t.push_back(gts("cid_ce", [](const SeriesStats& s) {
            double acc = 0.0;
            for (std::size_t i = 1; i < s.x.size(); ++i) acc += (s.x[i] - s.x[i - 1]) * (s.x[i] - s.x[i - 1]);
            return std::sqrt(acc);
        }));
        for (std::size_t lag : {1u, 2u, 3u, 6u, 12u})
            t.push_back(gts("autocorrelation_lag" + std::to_string(lag),
                            [lag](const SeriesStats& s) { return autocorrelation(s.x, lag); }));
        for (std::size_t k = 0; k < 5; ++k)
            t.push_back(gts("fft_abs_coeff" + std::to_string(k), [k](const SeriesStats& s) { return fft_abs(s.x, k); }));
        t.push_back(gts("linear_trend_slope", [](const SeriesStats& s) { return linear_trend(s.x).slope; }));
        t.push_back(gts("linear_trend_intercept", [](const SeriesStats& s) { return linear_trend(s.x).intercept; }));
        t.push_back(gts("linear_trend_rvalue", [](const SeriesStats& s) { return linear_trend(s.x).r; }));
        t.push_back(gts("number_peaks", [](const SeriesStats& s) {
            std::size_t peaks = 0;
            for (std::size_t i = 1; i + 1 < s.x.size(); ++i) peaks += s.x[i] > s.x[i - 1] && s.x[i] > s.x[i + 1];
            return static_cast<double>(peaks);
        }));
        t.push_back(gts("last_minus_first", [](const SeriesStats& s) { return s.x.back() - s.x.front(); }));
        return t;
    }();
    return table;
}

void append(std::vector<double>& out, const std::vector<double>& v) { out.insert(out.end(), v.begin(), v.end()); }

} // namespace

const std::vector<FeatureSpec>& generic_catalogue() {
    static const std::vector<FeatureSpec> specs = [] {
        std::vector<FeatureSpec> s;
        for (const auto& e : generic_extractors()) s.push_back(e.spec);
        return s;
    }();
    return specs;
}

FeatureCatalogue::FeatureCatalogue(int months) : months_(months) {
    if (months < 2) throw InvalidInput("feature extraction needs at least 2 months");
    auto add = [&](std::string name, FeatureFamily f) { entries_.push_back({std::move(name), f, FeatureKind::Continuous}); };
    for (int d = 12; d < months; ++d) add("intra_year_d" + std::to_string(d), FeatureFamily::DIF);
    for (int d = 13; d < months; ++d) add("intra_year_seasonal_d" + std::to_string(d), FeatureFamily::DIF);
    for (int k : {3, 6, 12})
        for (int d = 12; d < months; ++d)
            add("fixed_interval_k" + std::to_string(k) + "_d" + std::to_string(d), FeatureFamily::DIF);
    for (int d = 1; d < months; ++d) add("daily_avg_d" + std::to_string(d), FeatureFamily::AVG);
    for (const auto& spec : generic_catalogue()) entries_.push_back(spec);
}

std::size_t FeatureCatalogue::count(FeatureFamily family) const {
    return static_cast<std::size_t>(
        std::count_if(entries_.begin(), entries_.end(), [&](const FeatureSpec& s) { return s.family == family; }));
}

std::vector<double> intra_year_difference(std::span<const double> c) {
    std::vector<double> out;
    for (std::size_t d = 12; d < c.size(); ++d) out.push_back(c[d] - c[d - 12]);
    return out;
}

std::vector<double> intra_year_seasonal_difference(std::span<const double> c) {
    std::vector<double> out;
    for (std::size_t d = 13; d < c.size(); ++d) out.push_back(c[d] - (c[d - 13] + c[d - 12] + c[d - 11]) / 3.0);
    return out;
}

std::vector<double> fixed_interval(std::span<const double> c, int k) {
    if (k < 1 || k > 12) throw InvalidInput("fixed interval K must lie in [1, 12]");
    std::vector<double> out;
    for (std::size_t d = 12; d < c.size(); ++d) {
        double acc = 0.0;
        for (std::size_t j = d - static_cast<std::size_t>(k); j < d; ++j) acc += c[j];
        out.push_back(c[d] - acc / k);
    }
    return out;
}

std::vector<double> daily_average(std::span<const double> c, std::span<const int> gap_days) {
    if (gap_days.size() != c.size()) throw InvalidInput("one day gap per consumption value is required");
    std::vector<double> out;
    for (std::size_t d = 1; d < c.size(); ++d) {
        if (gap_days[d] <= 0)
            throw ValidationError("non-positive day gap " + std::to_string(gap_days[d]) + " at month " + std::to_string(d));
        out.push_back(c[d] / gap_days[d]);
    }
    return out;
}

std::vector<double> daily_average(const ConsumptionWindow& w) {
    std::vector<int> gaps(static_cast<std::size_t>(w.months()));
    for (int d = 0; d < w.months(); ++d) gaps[static_cast<std::size_t>(d)] = w.gap_days(d);
    return daily_average(w.consumption(), gaps);
}

double autocorrelation(std::span<const double> c, std::size_t lag) {
    const std::size_t n = c.size();
    if (lag >= n) return 0.0;
    const double mean = std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double v : c) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    if (var <= 0.0) return 0.0;
    double acc = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) acc += (c[t] - mean) * (c[t + lag] - mean);
    return acc / (static_cast<double>(n - lag) * var);
}

std::vector<double> generic_time_series_features(std::span<const double> c) {
    if (c.size() < 2) throw InvalidInput("generic features need at least 2 values");
    SeriesStats stats(c);
    std::vector<double> out;
    out.reserve(generic_extractors().size());
    for (const auto& e : generic_extractors()) out.push_back(e.fn(stats));
    return out;
}

std::vector<double> extract_features(const ConsumptionWindow& w, const FeatureCatalogue& catalogue) {
    if (w.months() != catalogue.months())
        throw InvalidInput("window for '" + w.customer_id() + "' has " + std::to_string(w.months()) +
                           " months, catalogue expects " + std::to_string(catalogue.months()));
    const auto c = w.consumption();
    std::vector<double> out;
    out.reserve(catalogue.size());
    append(out, intra_year_difference(c));
    append(out, intra_year_seasonal_difference(c));
    for (int k : {3, 6, 12}) append(out, fixed_interval(c, k));
    append(out, daily_average(w));
    append(out, generic_time_series_features(c));
    return out;
}

FeatureVector feature_vector(const ConsumptionWindow& w, const FeatureCatalogue& catalogue) {
    const auto values = extract_features(w, catalogue);
    FeatureVector fv;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto& spec = catalogue.entries()[i];
        fv.values.emplace(spec.qualified(), values[i]);
        fv.specs.emplace(spec.qualified(), spec);
    }
    return fv;
}

FeatureMatrix build_feature_matrix(std::span<const ConsumptionWindow> windows, int months, unsigned threads) {
    const FeatureCatalogue catalogue(months);
    for (const auto& w : windows)
        if (w.months() != months)
            throw InvalidInput("mixed window lengths: '" + w.customer_id() + "' has " + std::to_string(w.months()) +
                               " months, expected " + std::to_string(months));
    std::vector<std::vector<double>> rows(windows.size());
    parallel_for(windows.size(), threads, [&](std::size_t i) { rows[i] = extract_features(windows[i], catalogue); });
    FeatureMatrix m(catalogue.entries());
    for (std::size_t i = 0; i < windows.size(); ++i) m.add_row(windows[i].customer_id(), rows[i]);
    return m;
}

FeatureMatrix filter_families(const FeatureMatrix& m, std::span<const FeatureFamily> families) {
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < m.cols(); ++c)
        if (std::find(families.begin(), families.end(), m.columns()[c].family) != families.end()) keep.push_back(c);
    return m.select_columns(keep);
}

void write_matrix_csv(std::ostream& out, const FeatureMatrix& m) {
    out << "customer_id";
    for (const auto& spec : m.columns()) out << ',' << spec.qualified();
    out << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out << m.row_ids()[r];
        for (double v : m.row(r)) out << ',' << format_double(v);
        out << '\n';
    }
}

void write_matrix_csv(const std::filesystem::path& path, const FeatureMatrix& m) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    write_matrix_csv(out, m);
}

FeatureMatrix read_matrix_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty matrix file", 1);
    auto header = split_csv_line(line);
    if (header.empty() || header[0] != "customer_id") throw ParseError("matrix header must start with customer_id", 1);

    std::map<std::string, FeatureKind> known_kinds;
    for (const auto& spec : generic_catalogue()) known_kinds[spec.qualified()] = spec.kind;

    std::vector<FeatureSpec> specs;
    std::set<std::string> seen;
    for (std::size_t i = 1; i < header.size(); ++i) {
        const auto colon = header[i].find(':');
        auto family = colon == std::string_view::npos ? std::nullopt : parse_family(header[i].substr(0, colon));
        if (!family) throw ParseError("column '" + std::string(header[i]) + "' lacks a DIF/AVG/GTS tag", 1);
        FeatureSpec spec{std::string(header[i].substr(colon + 1)), *family, FeatureKind::Continuous};
        if (auto it = known_kinds.find(spec.qualified()); it != known_kinds.end()) spec.kind = it->second;
        if (!seen.insert(spec.qualified()).second)
            throw ParseError("duplicate column '" + spec.qualified() + "'", 1);
        specs.push_back(std::move(spec));
    }
    FeatureMatrix m(std::move(specs));
    std::vector<double> row(m.cols());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != m.cols() + 1)
            throw ParseError("expected " + std::to_string(m.cols() + 1) + " fields", line_no);
        for (std::size_t c = 0; c < m.cols(); ++c) {
            auto v = parse_double(fields[c + 1]);
            if (!v) throw ParseError("bad number '" + std::string(fields[c + 1]) + "'", line_no);
            row[c] = *v;
        }
        m.add_row(std::string(fields[0]), row);
    }
    return m;
}

FeatureMatrix read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    return read_matrix_csv(in);
}

void write_labels_csv(std::ostream& out, const std::vector<std::string>& ids, const std::vector<int>& labels) {
    if (ids.size() != labels.size()) throw InvalidInput("id and label counts differ");
    out << "customer_id,label\n";
    for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << ',' << labels[i] << '\n';
}

void write_labels_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                      const std::vector<int>& labels) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    write_labels_csv(out, ids, labels);
}

std::vector<int> read_labels_csv(std::istream& in, const std::vector<std::string>& row_ids) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty labels file", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "customer_id,label") throw ParseError("expected header 'customer_id,label'", 1);
    std::map<std::string, int, std::less<>> by_id;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto f = split_csv_line(line);
        if (f.size() != 2) throw ParseError("expected 2 fields", line_no);
        if (f[1] != "0" && f[1] != "1") throw ValidationError("label must be 0 or 1 (line " + std::to_string(line_no) + ")");
        by_id[std::string(f[0])] = f[1] == "1";
    }
    std::vector<int> out;
    out.reserve(row_ids.size());
    for (const auto& id : row_ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw InvalidDataset("no label for customer '" + id + "'");
        out.push_back(it->second);
    }
    return out;
}

std::vector<int> read_labels_csv(const std::filesystem::path& path, const std::vector<std::string>& row_ids) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    return read_labels_csv(in, row_ids);
}

} // namespace ntl
