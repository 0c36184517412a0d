#include "ntl/stats_select.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <math.h>
#include <numeric>

#include "ntl/features.hpp"
#include "ntl/parallel.hpp"

namespace ntl {

namespace {

// lgamma_r: std::lgamma writes the global signgam, which races when columns
// are tested in parallel.
double log_factorial(std::int64_t n) {
    int sign = 0;
    return ::lgamma_r(static_cast<double>(n) + 1.0, &sign);
}

double log_hypergeometric(std::int64_t a, std::int64_t r1, std::int64_t r2, std::int64_t c1, double log_norm) {
    return log_factorial(r1) - log_factorial(a) - log_factorial(r1 - a) + log_factorial(r2) -
           log_factorial(c1 - a) - log_factorial(r2 - c1 + a) - log_norm;
}

} // namespace

double fisher_exact_two_sided(const Table2x2& t) {
    if (t.a < 0 || t.b < 0 || t.c < 0 || t.d < 0) throw InvalidInput("Fisher table cells must be non-negative");
    const std::int64_t r1 = t.a + t.b, r2 = t.c + t.d, c1 = t.a + t.c;
    const std::int64_t n = r1 + r2;
    if (n < 1) throw InvalidInput("Fisher table must contain at least one observation");

    const double log_norm = log_factorial(n) - log_factorial(c1) - log_factorial(n - c1);
    const std::int64_t lo = std::max<std::int64_t>(0, c1 - r2);
    const std::int64_t hi = std::min(r1, c1);
    std::vector<double> logp(static_cast<std::size_t>(hi - lo + 1));
    for (std::int64_t x = lo; x <= hi; ++x)
        logp[static_cast<std::size_t>(x - lo)] = log_hypergeometric(x, r1, r2, c1, log_norm);

    const double observed = logp[static_cast<std::size_t>(t.a - lo)];
    const double peak = *std::max_element(logp.begin(), logp.end());
    const double cutoff = observed + std::log1p(1e-7);
    double total = 0.0, tail = 0.0;
    for (double lp : logp) {
        const double p = std::exp(lp - peak);
        total += p;
        if (lp <= cutoff) tail += p;
    }
    return std::clamp(tail / total, 0.0, 1.0);
}

double kolmogorov_survival(double lambda) {
    if (!(lambda > 0.0)) return 1.0;
    if (lambda < 1.18) {
        // Jacobi-theta form of the CDF converges quickly for small lambda.
        const double factor = std::sqrt(2.0 * M_PI) / lambda;
        const double w = M_PI * M_PI / (8.0 * lambda * lambda);
        double cdf = 0.0;
        for (int k = 1; k <= 20; ++k) {
            const double term = std::exp(-static_cast<double>((2 * k - 1) * (2 * k - 1)) * w);
            cdf += term;
            if (term < 1e-17 * cdf) break;
        }
        return std::clamp(1.0 - factor * cdf, 0.0, 1.0);
    }
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-17) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw InvalidInput("KS test needs two non-empty samples");
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());

    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < sa.size() && j < sb.size()) {
        const double x = std::min(sa[i], sb[j]);
        while (i < sa.size() && sa[i] == x) ++i;
        while (j < sb.size() && sb[j] == x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    KsResult r;
    r.statistic = d;
    r.p_value = kolmogorov_survival(std::sqrt(na * nb / (na + nb)) * d);
    return r;
}

std::string_view to_string(Correction c) { return c == Correction::None ? "none" : "BY"; }

std::optional<Correction> parse_correction(std::string_view s) {
    if (s == "none") return Correction::None;
    if (s == "BY" || s == "by") return Correction::BenjaminiYekutieli;
    return std::nullopt;
}

std::string_view to_string(TestKind t) { return t == TestKind::Fisher ? "fisher" : "ks"; }

std::vector<double> benjamini_yekutieli(std::span<const double> p) {
    const std::size_t m = p.size();
    std::vector<double> adjusted(m);
    if (m == 0) return adjusted;
    double harmonic = 0.0;
    for (std::size_t i = 1; i <= m; ++i) harmonic += 1.0 / static_cast<double>(i);

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return p[x] < p[y]; });
    double running = 1.0;
    for (std::size_t rank = m; rank >= 1; --rank) {
        const std::size_t idx = order[rank - 1];
        running = std::min(running, p[idx] * static_cast<double>(m) * harmonic / static_cast<double>(rank));
        adjusted[idx] = std::min(1.0, running);
    }
    return adjusted;
}

std::vector<std::string> SelectionReport::retained_names() const {
    std::vector<std::string> out;
    for (const auto& f : features)
        if (f.retained) out.push_back(f.name);
    return out;
}

SelectionReport select_features(const FeatureMatrix& matrix, std::span<const int> labels,
                                const SelectionOptions& options) {
    if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw InvalidInput("alpha must lie in (0,1)");
    if (labels.size() != matrix.rows()) throw InvalidInput("label count does not match matrix rows");
    std::size_t positives = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw InvalidDataset("labels must be 0 or 1");
        positives += static_cast<std::size_t>(y);
    }
    if (positives == 0 || positives == labels.size())
        throw InvalidDataset("feature selection needs both classes in the labels");

    SelectionReport report;
    report.alpha = options.alpha;
    report.correction = options.correction;
    report.catalogue_version = std::string(kCatalogueVersion);
    report.features.resize(matrix.cols());

    parallel_for(matrix.cols(), options.threads, [&](std::size_t c) {
        const auto& spec = matrix.columns()[c];
        FeatureTest& ft = report.features[c];
        ft.name = spec.qualified();
        ft.family = spec.family;

        const auto values = matrix.column(c);
        std::vector<double> distinct = values;
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

        if (distinct.size() <= 2) {
            ft.kind = FeatureKind::Binary;
            ft.test = TestKind::Fisher;
            if (distinct.size() < 2) {
                ft.p_value = 1.0;
                return;
            }
            Table2x2 t;
            for (std::size_t r = 0; r < values.size(); ++r) {
                const bool high = values[r] == distinct[1];
                if (!high) (labels[r] ? t.b : t.a)++;
                else (labels[r] ? t.d : t.c)++;
            }
            ft.p_value = fisher_exact_two_sided(t);
        } else {
            ft.kind = FeatureKind::Continuous;
            ft.test = TestKind::KolmogorovSmirnov;
            std::vector<double> neg, pos;
            for (std::size_t r = 0; r < values.size(); ++r) (labels[r] ? pos : neg).push_back(values[r]);
            ft.p_value = ks_two_sample(neg, pos).p_value;
        }
    });

    std::vector<double> p(report.features.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = report.features[i].p_value;
    const auto adjusted = options.correction == Correction::None ? p : benjamini_yekutieli(p);
    for (std::size_t i = 0; i < p.size(); ++i) {
        auto& ft = report.features[i];
        ft.adjusted_p = adjusted[i];
        ft.retained = adjusted[i] <= options.alpha && ft.p_value < 1.0;
        auto& tally = report.counts[ft.family];
        ++tally.before;
        tally.after += ft.retained;
    }
    return report;
}

nlohmann::json to_json(const SelectionReport& report) {
    nlohmann::json j;
    j["schema"] = "ntl.selection.v1";
    j["catalogue_version"] = report.catalogue_version;
    j["alpha"] = report.alpha;
    j["correction"] = to_string(report.correction);
    nlohmann::json counts = nlohmann::json::object();
    std::size_t before = 0, after = 0;
    for (const auto& [family, tally] : report.counts) {
        counts[std::string(to_string(family))] = {{"before", tally.before}, {"after", tally.after}};
        before += tally.before;
        after += tally.after;
    }
    counts["total"] = {{"before", before}, {"after", after}};
    j["counts"] = counts;
    nlohmann::json features = nlohmann::json::array();
    for (const auto& f : report.features)
        features.push_back({{"name", f.name},
                            {"family", to_string(f.family)},
                            {"kind", to_string(f.kind)},
                            {"test", to_string(f.test)},
                            {"p_value", f.p_value},
                            {"adjusted_p", f.adjusted_p},
                            {"retained", f.retained}});
    j["features"] = features;
    return j;
}

SelectionReport selection_report_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema") != "ntl.selection.v1") throw SchemaError("unsupported selection report schema");
        SelectionReport r;
        r.catalogue_version = j.at("catalogue_version").get<std::string>();
        r.alpha = j.at("alpha").get<double>();
        auto corr = parse_correction(j.at("correction").get<std::string>());
        if (!corr) throw SchemaError("unknown correction in selection report");
        r.correction = *corr;
        for (const auto& f : j.at("features")) {
            FeatureTest ft;
            ft.name = f.at("name").get<std::string>();
            auto fam = parse_family(f.at("family").get<std::string>());
            if (!fam) throw SchemaError("unknown family in selection report");
            ft.family = *fam;
            ft.kind = f.at("kind") == "binary" ? FeatureKind::Binary : FeatureKind::Continuous;
            ft.test = f.at("test") == "fisher" ? TestKind::Fisher : TestKind::KolmogorovSmirnov;
            ft.p_value = f.at("p_value").get<double>();
            ft.adjusted_p = f.at("adjusted_p").get<double>();
            ft.retained = f.at("retained").get<bool>();
            auto& tally = r.counts[ft.family];
            ++tally.before;
            tally.after += ft.retained;
            r.features.push_back(std::move(ft));
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed selection report: ") + e.what());
    }
}

void write_selection_report(const std::filesystem::path& path, const SelectionReport& report) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << to_json(report).dump(2) << '\n';
}

SelectionReport read_selection_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("cannot parse selection report: ") + e.what());
    }
    return selection_report_from_json(j);
}

} // namespace ntl
