#include "ntl/service.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

#include "ntl/features.hpp"
#include "ntl/text.hpp"

namespace ntl {

void validate(const TrafficLightConfig& c) {
    if (!(c.threshold > 0.0 && c.threshold < 1.0)) throw ConfigError("threshold must lie in (0,1)");
    if (!(c.band >= 0.0)) throw ConfigError("suspicious band must be >= 0");
}

Status classify(double score, const TrafficLightConfig& c) {
    if (std::abs(score - c.threshold) <= c.band) return Status::Suspicious;
    return score > c.threshold ? Status::Irregular : Status::Regular;
}

nlohmann::json to_json(const DecisionRecord& r) {
    return {{"customer_id", r.customer_id},
            {"decision", to_string(r.decision)},
            {"expert", r.expert},
            {"timestamp", r.timestamp},
            {"score", r.score}};
}

DecisionRecord decision_record_from_json(const nlohmann::json& j) {
    try {
        DecisionRecord r;
        r.customer_id = j.at("customer_id").get<std::string>();
        auto d = parse_decision(j.at("decision").get<std::string>());
        if (!d) throw SchemaError("decision log holds an unknown decision");
        r.decision = *d;
        r.expert = j.at("expert").get<std::string>();
        r.timestamp = j.at("timestamp").get<std::string>();
        r.score = j.at("score").get<double>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed decision record: ") + e.what());
    }
}

DecisionLog::DecisionLog(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(*path_);
    if (!in) return;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            throw ParseError("bad decision log entry in " + path_->string(), line_no);
        }
        auto r = decision_record_from_json(j);
        latest_[r.customer_id] = records_.size();
        records_.push_back(std::move(r));
    }
}

bool DecisionLog::append(const DecisionRecord& record) {
    if (auto it = latest_.find(record.customer_id); it != latest_.end()) {
        const auto& last = records_[it->second];
        if (last.decision == record.decision && last.expert == record.expert) return false;
    }
    if (path_) {
        std::ofstream out(*path_, std::ios::app);
        if (!out) throw InvalidInput("cannot append to " + path_->string());
        out << to_json(record).dump() << '\n';
        out.flush();
        if (!out) throw InvalidInput("failed writing " + path_->string());
    }
    latest_[record.customer_id] = records_.size();
    records_.push_back(record);
    return true;
}

Decision DecisionLog::current(const std::string& customer_id) const {
    auto it = latest_.find(customer_id);
    return it == latest_.end() ? Decision::None : records_[it->second].decision;
}

std::map<std::string, Decision> DecisionLog::replay(const std::vector<DecisionRecord>& records) {
    std::map<std::string, Decision> out;
    for (const auto& r : records) out[r.customer_id] = r.decision;
    return out;
}

double haversine_meters(const GeoPoint& a, const GeoPoint& b) {
    constexpr double kEarthRadius = 6371008.8;
    constexpr double deg = M_PI / 180.0;
    const double dlat = (b.latitude - a.latitude) * deg;
    const double dlon = (b.longitude - a.longitude) * deg;
    const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(a.latitude * deg) * std::cos(b.latitude * deg) * std::sin(dlon / 2) * std::sin(dlon / 2);
    return 2.0 * kEarthRadius * std::asin(std::min(1.0, std::sqrt(h)));
}

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ServiceResponse error(int status, std::string message) { return {status, {{"error", std::move(message)}}}; }

std::optional<double> parse_param(std::optional<std::string_view> text) {
    if (!text) return std::nullopt;
    auto v = parse_double(*text);
    if (!v || !std::isfinite(*v)) return std::nullopt;
    return v;
}

std::optional<std::size_t> parse_count(std::string_view text) {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size() || text.empty()) return std::nullopt;
    return v;
}

nlohmann::json record_json(const CustomerRecord& r) {
    return {{"customer_id", r.customer_id},
            {"latitude", r.location.latitude},
            {"longitude", r.location.longitude},
            {"neighborhood_id", r.neighborhood_id},
            {"score", r.score},
            {"status", to_string(r.status)},
            {"decision", to_string(r.decision)}};
}

std::vector<double> tail(std::span<const double> v, std::size_t n) {
    n = std::min(n, v.size());
    return {v.end() - static_cast<std::ptrdiff_t>(n), v.end()};
}

constexpr std::size_t kSparklineMonths = 12;
constexpr std::size_t kDefaultPageSize = 1000;
constexpr std::size_t kMaxPageSize = 10000;
constexpr std::size_t kBreakdownFeatures = 5;

} // namespace

ReviewService::ReviewService(std::vector<ServedCustomer> customers, std::vector<std::string> model_features,
                             std::string model_kind, TrafficLightConfig lights, DecisionLog log, Clock clock)
    : customers_(std::move(customers)),
      model_features_(std::move(model_features)),
      model_kind_(std::move(model_kind)),
      lights_(lights),
      log_(std::move(log)),
      clock_(clock ? std::move(clock) : Clock(utc_now)) {
    validate(lights_);
    std::sort(customers_.begin(), customers_.end(),
              [](const ServedCustomer& a, const ServedCustomer& b) { return a.geo.customer_id < b.geo.customer_id; });
    for (std::size_t i = 1; i < customers_.size(); ++i)
        if (customers_[i].geo.customer_id == customers_[i - 1].geo.customer_id)
            throw InvalidInput("duplicate customer '" + customers_[i].geo.customer_id + "'");

    const std::size_t nf = model_features_.size();
    feature_mean_.assign(nf, 0.0);
    feature_std_.assign(nf, 0.0);
    if (!customers_.empty()) {
        for (const auto& c : customers_)
            for (std::size_t j = 0; j < nf && j < c.model_features.size(); ++j) feature_mean_[j] += c.model_features[j];
        for (auto& m : feature_mean_) m /= static_cast<double>(customers_.size());
        for (const auto& c : customers_)
            for (std::size_t j = 0; j < nf && j < c.model_features.size(); ++j) {
                const double d = c.model_features[j] - feature_mean_[j];
                feature_std_[j] += d * d;
            }
        for (auto& s : feature_std_) s = std::sqrt(s / static_cast<double>(customers_.size()));
    }
}

ReviewService ReviewService::build(const TrainedModel& model, const std::vector<CustomerGeo>& customers,
                                   const WindowSet& windows, TrafficLightConfig lights, DecisionLog log, Clock clock) {
    std::map<std::string, const CustomerGeo*> geo;
    for (const auto& c : customers) geo[c.customer_id] = &c;
    const FeatureCatalogue catalogue(windows.months);
    std::vector<ServedCustomer> served;
    for (const auto& w : windows.windows) {
        auto it = geo.find(w.customer_id());
        if (it == geo.end()) continue;
        const auto fv = feature_vector(w, catalogue);
        const auto projected = project(fv, model.feature_names);
        ServedCustomer sc{*it->second, w, predict(model, projected), {}};
        for (const auto& name : model.feature_names) sc.model_features.push_back(projected.values.at(name));
        served.push_back(std::move(sc));
    }
    return ReviewService(std::move(served), model.feature_names, std::string(to_string(model.kind())), lights,
                         std::move(log), std::move(clock));
}

std::optional<std::size_t> ReviewService::index_of(const std::string& id) const {
    auto it = std::lower_bound(customers_.begin(), customers_.end(), id,
                               [](const ServedCustomer& c, const std::string& key) { return c.geo.customer_id < key; });
    if (it == customers_.end() || it->geo.customer_id != id) return std::nullopt;
    return static_cast<std::size_t>(it - customers_.begin());
}

CustomerRecord ReviewService::record(std::size_t i) const {
    const auto& c = customers_[i];
    CustomerRecord r;
    r.customer_id = c.geo.customer_id;
    r.location = c.geo.location;
    r.neighborhood_id = c.geo.neighborhood_id;
    r.score = c.score;
    r.status = classify(c.score, lights_);
    r.decision = log_.current(c.geo.customer_id);
    return r;
}

std::vector<CustomerRecord> ReviewService::records() const {
    std::shared_lock lock(mutex_);
    std::vector<CustomerRecord> out;
    out.reserve(customers_.size());
    for (std::size_t i = 0; i < customers_.size(); ++i) out.push_back(record(i));
    return out;
}

std::vector<DecisionRecord> ReviewService::decision_history() const {
    std::shared_lock lock(mutex_);
    return log_.records();
}

ServiceResponse ReviewService::list_customers(std::optional<std::string_view> bbox, std::optional<std::string_view> offset,
                                              std::optional<std::string_view> limit) const {
    double min_lon = -180, min_lat = -90, max_lon = 180, max_lat = 90;
    if (bbox) {
        auto parts = split_csv_line(*bbox);
        if (parts.size() != 4) return error(400, "bbox must be minLon,minLat,maxLon,maxLat");
        double v[4];
        for (int k = 0; k < 4; ++k) {
            auto x = parse_double(parts[static_cast<std::size_t>(k)]);
            if (!x || !std::isfinite(*x)) return error(400, "bbox values must be numbers");
            v[k] = *x;
        }
        min_lon = v[0], min_lat = v[1], max_lon = v[2], max_lat = v[3];
        if (min_lon > max_lon || min_lat > max_lat) return error(400, "bbox minimum exceeds maximum");
    }
    std::size_t off = 0, lim = kDefaultPageSize;
    if (offset) {
        auto o = parse_count(*offset);
        if (!o) return error(400, "offset must be a non-negative integer");
        off = *o;
    }
    if (limit) {
        auto l = parse_count(*limit);
        if (!l || *l == 0 || *l > kMaxPageSize) return error(400, "limit must lie in [1, 10000]");
        lim = *l;
    }

    std::shared_lock lock(mutex_);
    nlohmann::json items = nlohmann::json::array();
    std::size_t total = 0;
    for (std::size_t i = 0; i < customers_.size(); ++i) {
        const auto& p = customers_[i].geo.location;
        if (p.longitude < min_lon || p.longitude > max_lon || p.latitude < min_lat || p.latitude > max_lat) continue;
        if (total >= off && items.size() < lim) items.push_back(record_json(record(i)));
        ++total;
    }
    return {200,
            {{"schema", kCustomersSchema}, {"total", total}, {"offset", off}, {"limit", lim}, {"customers", items}}};
}

ServiceResponse ReviewService::profile(const std::string& id, std::optional<std::string_view> months) const {
    auto idx = index_of(id);
    if (!idx) return error(404, "unknown customer '" + id + "'");
    const auto& c = customers_[*idx];
    const std::size_t n_months = static_cast<std::size_t>(c.window.months());
    std::size_t m = std::min<std::size_t>(12, n_months);
    if (months) {
        auto v = parse_count(*months);
        if (!v || *v == 0 || *v > n_months)
            return error(400, "months must lie in [1, " + std::to_string(n_months) + "]");
        m = *v;
    }

    const auto consumption = c.window.consumption();
    const auto dates = c.window.reading_dates();
    nlohmann::json series = nlohmann::json::array(), daily = nlohmann::json::array(), read = nlohmann::json::array();
    for (std::size_t d = n_months - m; d < n_months; ++d) {
        const int gap = c.window.gap_days(static_cast<int>(d));
        series.push_back(consumption[d]);
        daily.push_back(consumption[d] / gap);
        read.push_back(format_date(dates[d + 1]));
    }

    // Breakdown: the model inputs where this customer deviates most from the
    // served population.
    std::vector<std::pair<double, std::size_t>> deviation;
    for (std::size_t j = 0; j < c.model_features.size(); ++j) {
        const double z = feature_std_[j] > 0.0 ? (c.model_features[j] - feature_mean_[j]) / feature_std_[j] : 0.0;
        deviation.push_back({-std::abs(z), j});
    }
    std::sort(deviation.begin(), deviation.end());
    nlohmann::json top = nlohmann::json::array();
    for (std::size_t k = 0; k < deviation.size() && k < kBreakdownFeatures; ++k) {
        const auto j = deviation[k].second;
        top.push_back({{"feature", model_features_[j]},
                       {"value", c.model_features[j]},
                       {"population_mean", feature_mean_[j]},
                       {"z_score", feature_std_[j] > 0.0 ? (c.model_features[j] - feature_mean_[j]) / feature_std_[j] : 0.0}});
    }

    std::shared_lock lock(mutex_);
    const auto rec = record(*idx);
    return {200,
            {{"schema", kProfileSchema},
             {"customer", record_json(rec)},
             {"months", m},
             {"reading_dates", read},
             {"consumption_kwh", series},
             {"daily_average_kwh", daily},
             {"score", rec.score},
             {"status", to_string(rec.status)},
             {"breakdown",
              {{"model_kind", model_kind_},
               {"threshold", lights_.threshold},
               {"band", lights_.band},
               {"distance_to_threshold", rec.score - lights_.threshold},
               {"top_features", top}}}}};
}

ServiceResponse ReviewService::neighbors(const std::string& id, std::optional<std::string_view> radius) const {
    auto idx = index_of(id);
    if (!idx) return error(404, "unknown customer '" + id + "'");
    auto r = parse_param(radius);
    if (!r || !(*r > 0.0)) return error(400, "radius must be a positive number of meters");
    const auto& origin = customers_[*idx].geo.location;

    std::vector<std::pair<double, std::size_t>> hits;
    for (std::size_t i = 0; i < customers_.size(); ++i) {
        const double d = haversine_meters(origin, customers_[i].geo.location);
        if (d <= *r) hits.push_back({d, i});
    }
    std::sort(hits.begin(), hits.end()); // distance, then id order

    std::shared_lock lock(mutex_);
    nlohmann::json items = nlohmann::json::array();
    for (const auto& [d, i] : hits) {
        auto j = record_json(record(i));
        j["distance_m"] = d;
        j["sparkline_kwh"] = tail(customers_[i].window.consumption(), kSparklineMonths);
        items.push_back(std::move(j));
    }
    return {200, {{"schema", kNeighborsSchema}, {"customer_id", id}, {"radius_m", *r}, {"neighbors", items}}};
}

ServiceResponse ReviewService::post_decision(const std::string& id, std::string_view body) {
    auto idx = index_of(id);
    if (!idx) return error(404, "unknown customer '" + id + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception&) {
        return error(400, "body must be JSON");
    }
    if (!j.is_object() || !j.contains("decision") || !j["decision"].is_string())
        return error(400, "body needs a string 'decision'");
    auto decision = parse_decision(j["decision"].get<std::string>());
    if (!decision) return error(400, "decision must be 'inspect' or 'skip'");
    std::string expert = "anonymous";
    if (j.contains("expert")) {
        if (!j["expert"].is_string()) return error(400, "'expert' must be a string");
        expert = j["expert"].get<std::string>();
    }

    std::unique_lock lock(mutex_);
    DecisionRecord rec{id, *decision, expert, clock_(), customers_[*idx].score};
    const bool appended = log_.append(rec);
    return {200,
            {{"schema", kDecisionSchema},
             {"customer_id", id},
             {"decision", to_string(*decision)},
             {"expert", expert},
             {"appended", appended},
             {"timestamp", rec.timestamp}}};
}

ServiceResponse ReviewService::queue() const {
    std::shared_lock lock(mutex_);
    std::vector<CustomerRecord> q;
    for (std::size_t i = 0; i < customers_.size(); ++i) {
        auto r = record(i);
        if (r.decision == Decision::Inspect || (r.decision == Decision::None && r.status == Status::Irregular))
            q.push_back(std::move(r));
    }
    std::sort(q.begin(), q.end(), [](const CustomerRecord& a, const CustomerRecord& b) {
        return a.score != b.score ? a.score > b.score : a.customer_id < b.customer_id;
    });
    nlohmann::json items = nlohmann::json::array();
    for (const auto& r : q) items.push_back(record_json(r));
    return {200, {{"schema", kQueueSchema}, {"total", q.size()}, {"customers", items}}};
}

} // namespace ntl
