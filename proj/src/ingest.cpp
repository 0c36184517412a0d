#include "ntl/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <toml.hpp>

#include "ntl/random.hpp"
#include "ntl/text.hpp"

namespace ntl {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    return in;
}

// Reads the header line and checks it. Returns false on an empty stream.
bool expect_header(std::istream& in, std::string_view expected) {
    std::string line;
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected)
        throw ParseError("expected header '" + std::string(expected) + "', got '" + line + "'", 1);
    return true;
}

Date require_date(std::string_view field, std::size_t line) {
    auto d = parse_date(field);
    if (!d) throw ParseError("bad date '" + std::string(field) + "'", line);
    return *d;
}

double require_number(std::string_view field, std::size_t line) {
    auto v = parse_double(field);
    if (!v || !std::isfinite(*v)) throw ParseError("bad number '" + std::string(field) + "'", line);
    return *v;
}

std::vector<std::string_view> require_fields(const std::string& line, std::size_t n, std::size_t line_no) {
    auto fields = split_csv_line(line);
    if (fields.size() != n)
        throw ParseError("expected " + std::to_string(n) + " fields, got " + std::to_string(fields.size()),
                         line_no);
    if (fields[0].empty()) throw ParseError("empty customer_id", line_no);
    return fields;
}

} // namespace

ReadingHistory read_readings_csv(std::istream& in) {
    ReadingHistory history;
    if (!expect_header(in, "customer_id,reading_date,consumption_kwh")) return history;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto f = require_fields(line, 3, line_no);
        const Date date = require_date(f[1], line_no);
        const double kwh = require_number(f[2], line_no);
        if (kwh < 0.0)
            throw ValidationError("negative consumption " + std::string(f[2]) + " (line " +
                                  std::to_string(line_no) + ")");
        history[std::string(f[0])].push_back({date, kwh});
    }
    for (auto& [id, readings] : history)
        std::stable_sort(readings.begin(), readings.end(),
                         [](const Reading& a, const Reading& b) { return a.date < b.date; });
    return history;
}

WindowLoadResult build_windows(const ReadingHistory& history, int months,
                               const std::vector<InspectionLabel>* inspections) {
    if (months < 1) throw ConfigError("window length must be at least 1 month");
    std::map<std::string, Date> label_dates;
    if (inspections)
        for (const auto& l : *inspections) label_dates[l.customer_id] = l.inspection_date;

    WindowLoadResult result;
    const std::size_t need = static_cast<std::size_t>(months) + 1;
    for (const auto& [id, readings] : history) {
        std::optional<Date> label;
        std::size_t end = readings.size();
        if (inspections) {
            auto it = label_dates.find(id);
            if (it == label_dates.end()) {
                result.excluded_customers.push_back(id);
                continue;
            }
            label = it->second;
            end = static_cast<std::size_t>(
                std::lower_bound(readings.begin(), readings.end(), *label,
                                 [](const Reading& r, Date d) { return r.date < d; }) -
                readings.begin());
        }
        if (end < need) {
            result.excluded_customers.push_back(id);
            continue;
        }
        const std::size_t begin = end - need;
        bool complete = true;
        for (std::size_t i = begin + 1; i < end && complete; ++i)
            complete = month_index(readings[i].date) - month_index(readings[i - 1].date) == 1;
        if (complete && label) {
            const int lag = month_index(*label) - month_index(readings[end - 1].date);
            complete = lag == 0 || lag == 1;
        }
        if (!complete) {
            result.excluded_customers.push_back(id);
            continue;
        }
        std::vector<Date> dates;
        std::vector<double> values;
        dates.reserve(need);
        values.reserve(need - 1);
        for (std::size_t i = begin; i < end; ++i) {
            dates.push_back(readings[i].date);
            if (i > begin) values.push_back(readings[i].consumption_kwh);
        }
        const Date label_date = label ? *label : dates.back();
        result.windows.emplace_back(id, std::move(dates), std::move(values), label_date);
    }
    return result;
}

WindowLoadResult load_readings(std::istream& in, int months, const std::vector<InspectionLabel>* inspections) {
    return build_windows(read_readings_csv(in), months, inspections);
}

WindowLoadResult load_readings(const std::filesystem::path& path, int months,
                               const std::vector<InspectionLabel>* inspections) {
    auto in = open_input(path);
    return load_readings(in, months, inspections);
}

void write_readings(std::ostream& out, const std::vector<ConsumptionWindow>& windows) {
    out << "customer_id,reading_date,consumption_kwh\n";
    for (const auto& w : windows) {
        auto dates = w.reading_dates();
        auto values = w.consumption();
        out << w.customer_id() << ',' << format_date(dates[0]) << ",0\n";
        for (std::size_t d = 0; d < values.size(); ++d)
            out << w.customer_id() << ',' << format_date(dates[d + 1]) << ',' << format_double(values[d]) << '\n';
    }
}

void write_reading_history(std::ostream& out, const ReadingHistory& history) {
    out << "customer_id,reading_date,consumption_kwh\n";
    for (const auto& [id, readings] : history)
        for (const auto& r : readings)
            out << id << ',' << format_date(r.date) << ',' << format_double(r.consumption_kwh) << '\n';
}

std::vector<InspectionLabel> load_inspections(std::istream& in) {
    std::map<std::string, InspectionLabel> latest;
    if (!expect_header(in, "customer_id,inspection_date,outcome")) return {};
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto f = require_fields(line, 3, line_no);
        const Date date = require_date(f[1], line_no);
        int outcome = -1;
        if (f[2] == "0") outcome = 0;
        else if (f[2] == "1") outcome = 1;
        else
            throw ValidationError("outcome must be 0 or 1, got '" + std::string(f[2]) + "' (line " +
                                  std::to_string(line_no) + ")");
        InspectionLabel label{std::string(f[0]), outcome, date};
        auto it = latest.find(label.customer_id);
        if (it == latest.end()) latest.emplace(label.customer_id, std::move(label));
        else if (it->second.inspection_date <= date) it->second = std::move(label);
    }
    std::vector<InspectionLabel> out;
    out.reserve(latest.size());
    for (auto& [id, l] : latest) out.push_back(std::move(l));
    return out;
}

std::vector<InspectionLabel> load_inspections(const std::filesystem::path& path) {
    auto in = open_input(path);
    return load_inspections(in);
}

void write_inspections(std::ostream& out, const std::vector<InspectionLabel>& labels) {
    out << "customer_id,inspection_date,outcome\n";
    for (const auto& l : labels)
        out << l.customer_id << ',' << format_date(l.inspection_date) << ',' << l.outcome << '\n';
}

std::vector<CustomerGeo> load_customers(std::istream& in) {
    std::vector<CustomerGeo> out;
    if (!expect_header(in, "customer_id,latitude,longitude,neighborhood_id")) return out;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto f = require_fields(line, 4, line_no);
        CustomerGeo c;
        c.customer_id = std::string(f[0]);
        c.location.latitude = require_number(f[1], line_no);
        c.location.longitude = require_number(f[2], line_no);
        if (std::abs(c.location.latitude) > 90.0 || std::abs(c.location.longitude) > 180.0)
            throw ValidationError("coordinates out of range (line " + std::to_string(line_no) + ")");
        c.neighborhood_id = std::string(f[3]);
        out.push_back(std::move(c));
    }
    std::sort(out.begin(), out.end(),
              [](const CustomerGeo& a, const CustomerGeo& b) { return a.customer_id < b.customer_id; });
    return out;
}

std::vector<CustomerGeo> load_customers(const std::filesystem::path& path) {
    auto in = open_input(path);
    return load_customers(in);
}

void write_customers(std::ostream& out, const std::vector<CustomerGeo>& customers) {
    out << "customer_id,latitude,longitude,neighborhood_id\n";
    for (const auto& c : customers)
        out << c.customer_id << ',' << format_double(c.location.latitude) << ','
            << format_double(c.location.longitude) << ',' << c.neighborhood_id << '\n';
}

WindowSet attach_labels(int months, std::vector<ConsumptionWindow> windows,
                        const std::vector<InspectionLabel>& labels) {
    std::map<std::string, int> outcome;
    for (const auto& l : labels) outcome[l.customer_id] = l.outcome;
    WindowSet set;
    set.months = months;
    set.outcomes.reserve(windows.size());
    for (const auto& w : windows) {
        if (w.months() != months) throw InvalidInput("window for '" + w.customer_id() + "' has wrong length");
        auto it = outcome.find(w.customer_id());
        set.outcomes.push_back(it == outcome.end() ? -1 : it->second);
    }
    set.windows = std::move(windows);
    return set;
}

// ---------------------------------------------------------------------------
// Binary window store

namespace {

constexpr char kMagic[4] = {'N', 'T', 'L', 'W'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    out.write(buf, sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    char buf[sizeof(T)];
    if (!in.read(buf, sizeof(T))) throw InvalidInput("truncated window file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

} // namespace

void write_window_set(const std::filesystem::path& path, const WindowSet& set) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out.write(kMagic, 4);
    put<std::uint32_t>(out, kVersion);
    put<std::int32_t>(out, set.months);
    put<std::uint64_t>(out, set.windows.size());
    for (std::size_t i = 0; i < set.windows.size(); ++i) {
        const auto& w = set.windows[i];
        put<std::uint32_t>(out, static_cast<std::uint32_t>(w.customer_id().size()));
        out.write(w.customer_id().data(), static_cast<std::streamsize>(w.customer_id().size()));
        put<std::int32_t>(out, w.label_date().time_since_epoch().count());
        put<std::int32_t>(out, i < set.outcomes.size() ? set.outcomes[i] : -1);
        for (Date d : w.reading_dates()) put<std::int32_t>(out, d.time_since_epoch().count());
        for (double c : w.consumption()) put<double>(out, c);
    }
    if (!out) throw InvalidInput("failed writing " + path.string());
}

WindowSet read_window_set(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw InvalidInput(path.string() + " is not a window file");
    if (get<std::uint32_t>(in) != kVersion) throw InvalidInput("unsupported window file version");
    WindowSet set;
    set.months = get<std::int32_t>(in);
    if (set.months < 1) throw InvalidInput("bad window length in " + path.string());
    const auto count = get<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto id_len = get<std::uint32_t>(in);
        std::string id(id_len, '\0');
        if (!in.read(id.data(), id_len)) throw InvalidInput("truncated window file");
        const Date label{std::chrono::days{get<std::int32_t>(in)}};
        set.outcomes.push_back(get<std::int32_t>(in));
        std::vector<Date> dates(static_cast<std::size_t>(set.months) + 1);
        for (auto& d : dates) d = Date{std::chrono::days{get<std::int32_t>(in)}};
        std::vector<double> values(static_cast<std::size_t>(set.months));
        for (auto& v : values) v = get<double>(in);
        set.windows.emplace_back(std::move(id), std::move(dates), std::move(values), label);
    }
    return set;
}

// ---------------------------------------------------------------------------
// Synthetic generator

std::string_view to_string(Anomaly a) {
    switch (a) {
    case Anomaly::None: return "none";
    case Anomaly::StepDrop: return "step_drop";
    case Anomaly::Decay: return "decay";
    case Anomaly::UnderRecording: return "under_recording";
    }
    return "?";
}

void validate(const SynthConfig& c) {
    if (c.n_customers < 1) throw ConfigError("n_customers must be at least 1");
    if (!(c.ntl_fraction > 0.0 && c.ntl_fraction < 1.0)) throw ConfigError("ntl_fraction must lie in (0,1)");
    if (c.window_months < 14) throw ConfigError("window_months must be at least 14");
    if (c.n_months < c.window_months + 1)
        throw ConfigError("n_months (" + std::to_string(c.n_months) + ") must be at least window_months + 1 (" +
                          std::to_string(c.window_months + 1) + ")");
    if (c.n_neighborhoods < 1) throw ConfigError("n_neighborhoods must be at least 1");
    if (!(c.neighborhood_ntl_boost >= 0.0)) throw ConfigError("neighborhood_ntl_boost must be >= 0");
    if (!(c.hot_neighborhood_fraction >= 0.0 && c.hot_neighborhood_fraction <= 1.0))
        throw ConfigError("hot_neighborhood_fraction must lie in [0,1]");
    if (!(c.seasonal_amplitude >= 0.0 && c.seasonal_amplitude < 1.0))
        throw ConfigError("seasonal_amplitude must lie in [0,1)");
    if (!(c.noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be >= 0");
    if (!(c.benign_shift_fraction >= 0.0 && c.benign_shift_fraction <= 1.0))
        throw ConfigError("benign_shift_fraction must lie in [0,1]");
}

SynthConfig load_synth_config(const std::filesystem::path& path) {
    toml::table tbl;
    try {
        tbl = toml::parse_file(path.string());
    } catch (const toml::parse_error& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + std::string(e.description()));
    }
    SynthConfig c;
    auto integer = [](const toml::node& n, std::string_view key) {
        auto v = n.value<std::int64_t>();
        if (!v) throw ConfigError(std::string(key) + " must be an integer");
        return *v;
    };
    auto real = [](const toml::node& n, std::string_view key) {
        auto v = n.value<double>();
        if (!v) throw ConfigError(std::string(key) + " must be a number");
        return *v;
    };
    for (const auto& [k, node] : tbl) {
        const std::string_view key = k.str();
        if (key == "n_customers") {
            auto v = integer(node, key);
            if (v < 1) throw ConfigError("n_customers must be at least 1");
            c.n_customers = static_cast<std::size_t>(v);
        } else if (key == "ntl_fraction") c.ntl_fraction = real(node, key);
        else if (key == "n_months") c.n_months = static_cast<int>(integer(node, key));
        else if (key == "window_months") c.window_months = static_cast<int>(integer(node, key));
        else if (key == "n_neighborhoods") c.n_neighborhoods = static_cast<int>(integer(node, key));
        else if (key == "neighborhood_ntl_boost") c.neighborhood_ntl_boost = real(node, key);
        else if (key == "hot_neighborhood_fraction") c.hot_neighborhood_fraction = real(node, key);
        else if (key == "seasonal_amplitude") c.seasonal_amplitude = real(node, key);
        else if (key == "noise_sigma") c.noise_sigma = real(node, key);
        else if (key == "benign_shift_fraction") c.benign_shift_fraction = real(node, key);
        else if (key == "rng_seed") c.rng_seed = static_cast<std::uint64_t>(integer(node, key));
        else if (key == "start_date") {
            auto s = node.value<std::string>();
            auto d = s ? parse_date(*s) : std::nullopt;
            if (!d) throw ConfigError("start_date must be an ISO date string");
            c.start_date = *d;
        } else if (key == "town_latitude") c.town_center.latitude = real(node, key);
        else if (key == "town_longitude") c.town_center.longitude = real(node, key);
        else throw ConfigError("unknown config key '" + std::string(key) + "'");
    }
    validate(c);
    return c;
}

namespace {

std::string pad_id(char prefix, std::size_t i, int width) {
    std::string digits = std::to_string(i);
    return std::string(1, prefix) + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(digits.size()))), '0') + digits;
}

Date first_of_month(int month_ordinal) {
    return Date{std::chrono::year{month_ordinal / 12} / std::chrono::month{static_cast<unsigned>(month_ordinal % 12 + 1)} / 1};
}

// One reading per calendar month, always between the 4th and the 25th, with
// consecutive gaps in [28, 33] days.
std::vector<Date> reading_schedule(Rng& rng, Date start, int count) {
    constexpr int kMinOffset = 3, kMaxOffset = 24;
    std::vector<Date> dates;
    dates.reserve(static_cast<std::size_t>(count));
    int month = month_index(start);
    dates.push_back(first_of_month(month) + std::chrono::days{rng.uniform_int(kMinOffset, kMaxOffset)});
    for (int i = 1; i < count; ++i) {
        ++month;
        const Date base = first_of_month(month);
        const int prev = static_cast<int>((dates.back() - base).count()); // negative
        const int lo = std::max(kMinOffset, 28 + prev);
        const int hi = std::min(kMaxOffset, 33 + prev);
        dates.push_back(base + std::chrono::days{rng.uniform_int(lo, hi)});
    }
    return dates;
}

struct SeriesPlan {
    Anomaly anomaly = Anomaly::None;
    int onset = 0;       // window interval index where the pattern starts
    double factor = 1.0; // recorded / true after onset
    double tau = 1.0;    // decay time constant in months
};

double mean_of(const std::vector<double>& v, std::size_t from, std::size_t to) {
    double s = 0.0;
    for (std::size_t i = from; i < to; ++i) s += v[i];
    return s / static_cast<double>(to - from);
}

} // namespace

SyntheticData generate_synthetic(const SynthConfig& config) {
    validate(config);
    const std::size_t n = config.n_customers;
    const int N = config.window_months;
    Rng rng(config.rng_seed);

    // Neighborhood layout on a square grid of ~1.1 km cells.
    const int grid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(config.n_neighborhoods))));
    std::vector<GeoPoint> centers;
    std::vector<std::string> nb_ids;
    for (int k = 0; k < config.n_neighborhoods; ++k) {
        centers.push_back({config.town_center.latitude + 0.01 * (k / grid - grid / 2.0),
                           config.town_center.longitude + 0.01 * (k % grid - grid / 2.0)});
        nb_ids.push_back(pad_id('N', static_cast<std::size_t>(k), 3));
    }
    std::vector<std::size_t> nb_order(static_cast<std::size_t>(config.n_neighborhoods));
    std::iota(nb_order.begin(), nb_order.end(), 0);
    rng.shuffle(nb_order);
    const auto n_hot = static_cast<std::size_t>(std::llround(config.hot_neighborhood_fraction * config.n_neighborhoods));
    std::vector<bool> hot(nb_order.size(), false);
    SyntheticData data;
    for (std::size_t i = 0; i < n_hot; ++i) hot[nb_order[i]] = true;
    for (std::size_t k = 0; k < hot.size(); ++k)
        if (hot[k]) data.hot_neighborhoods.push_back(nb_ids[k]);

    const int id_width = std::max(6, static_cast<int>(std::to_string(n).size()));
    std::vector<std::size_t> neighborhood(n);
    for (std::size_t i = 0; i < n; ++i) neighborhood[i] = rng.index(centers.size());

    // Exactly round(fraction * n) positives, weighted sampling without
    // replacement (Efraimidis-Spirakis keys).
    const auto n_pos = static_cast<std::size_t>(std::llround(config.ntl_fraction * static_cast<double>(n)));
    std::vector<std::pair<double, std::size_t>> keys(n);
    for (std::size_t i = 0; i < n; ++i) {
        double u;
        do {
            u = rng.uniform();
        } while (u <= 0.0);
        const double w = hot[neighborhood[i]] ? 1.0 + config.neighborhood_ntl_boost : 1.0;
        keys[i] = {std::log(u) / w, i};
    }
    std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<int> label(n, 0);
    for (std::size_t i = 0; i < n_pos; ++i) label[keys[i].second] = 1;

    const std::uint64_t series_seed = rng.next();
    const int window_start = config.n_months - N; // reading index whose interval is C_0
    for (std::size_t i = 0; i < n; ++i) {
        Rng r(derive_seed(series_seed, i));
        const std::string id = pad_id('C', i + 1, id_width);
        const auto& center = centers[neighborhood[i]];
        data.customers.push_back({id,
                                  {center.latitude + r.normal(0.0, 0.0025), center.longitude + r.normal(0.0, 0.0025)},
                                  nb_ids[neighborhood[i]]});

        const auto dates = reading_schedule(r, config.start_date, config.n_months);
        const double base_rate = std::exp(r.normal(std::log(7.0), 0.5)); // kWh/day
        const double phase = r.normal(0.0, 0.3);
        const double amplitude = config.seasonal_amplitude * r.uniform(0.6, 1.4);

        SeriesPlan plan;
        double benign_shift = 1.0;
        int benign_onset = config.n_months;
        if (label[i]) {
            const double pick = r.uniform();
            if (pick < 0.45) {
                plan.anomaly = Anomaly::StepDrop;
                plan.onset = static_cast<int>(r.uniform_int(N - 12, N - 3));
                plan.factor = 1.0 - r.uniform(0.4, 0.8);
            } else if (pick < 0.65) {
                plan.anomaly = Anomaly::Decay;
                plan.onset = static_cast<int>(r.uniform_int(N - 12, N - 4));
                plan.tau = r.uniform(1.0, 3.0);
                plan.factor = r.uniform(0.0, 0.05);
            } else {
                plan.anomaly = Anomaly::UnderRecording;
                plan.onset = static_cast<int>(r.uniform_int(2, N - 6));
                plan.factor = r.uniform(0.35, 0.65);
            }
        } else if (r.uniform() < config.benign_shift_fraction) {
            benign_shift = r.uniform() < 0.5 ? r.uniform(0.7, 0.9) : r.uniform(1.1, 1.4);
            benign_onset = static_cast<int>(r.uniform_int(1, config.n_months - 1));
        }

        std::vector<double> truth(dates.size());
        for (std::size_t k = 0; k < dates.size(); ++k) {
            const int gap = k == 0 ? 30 : static_cast<int>((dates[k] - dates[k - 1]).count());
            const int cal_month = month_index(dates[k]) % 12;
            const double season = 1.0 + amplitude * std::cos(2.0 * M_PI * cal_month / 12.0 + phase);
            const double noise = std::max(0.0, 1.0 + r.normal(0.0, config.noise_sigma));
            double rate = base_rate * season * noise;
            if (static_cast<int>(k) >= benign_onset) rate *= benign_shift;
            truth[k] = rate * gap;
        }

        auto recorded_factor = [&](int d) {
            if (plan.anomaly == Anomaly::None || d < plan.onset) return 1.0;
            if (plan.anomaly == Anomaly::Decay)
                return plan.factor + (1.0 - plan.factor) * std::exp(-(d - plan.onset + 1) / plan.tau);
            return plan.factor;
        };
        std::vector<double> recorded(truth.size());
        auto apply = [&] {
            for (std::size_t k = 0; k < truth.size(); ++k) {
                const int d = static_cast<int>(k) - window_start;
                recorded[k] = std::round(truth[k] * recorded_factor(d) * 10.0) / 10.0;
            }
        };
        apply();
        if (plan.anomaly == Anomaly::StepDrop) {
            // Keep the visible drop: the last quarter must sit below 60% of the
            // first window year, whatever the season and noise did.
            const auto w0 = static_cast<std::size_t>(window_start);
            const double first_year = mean_of(recorded, w0, w0 + 12);
            const double last3 = mean_of(recorded, recorded.size() - 3, recorded.size());
            if (!(last3 < 0.6 * first_year) && last3 > 0.0) {
                plan.factor *= 0.5 * first_year / last3;
                apply();
            }
        }

        auto& series = data.readings[id];
        series.reserve(dates.size());
        for (std::size_t k = 0; k < dates.size(); ++k) series.push_back({dates[k], recorded[k]});
        data.labels.push_back({id, label[i], dates.back() + std::chrono::days{r.uniform_int(1, 10)}});
        data.anomaly.emplace(id, plan.anomaly);
    }
    return data;
}

void write_synthetic(const std::filesystem::path& dir, const SyntheticData& data) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream out(dir / name);
        if (!out) throw InvalidInput("cannot write " + (dir / name).string());
        return out;
    };
    {
        auto out = open("readings.csv");
        write_reading_history(out, data.readings);
    }
    {
        auto out = open("inspections.csv");
        write_inspections(out, data.labels);
    }
    {
        auto out = open("customers.csv");
        write_customers(out, data.customers);
    }
}

} // namespace ntl
