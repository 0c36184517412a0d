#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ntl/core_model.hpp"
#include "ntl/ingest.hpp"
#include "ntl/model.hpp"

namespace ntl {

/// Traffic-light partition of scores: suspicious iff |score - t| <= band,
/// irregular above the band, regular below it.
struct TrafficLightConfig {
    double threshold = 0.5;
    double band = 0.1;
};

/// Throws ConfigError unless 0 < threshold < 1 and band >= 0.
void validate(const TrafficLightConfig& config);
Status classify(double score, const TrafficLightConfig& config);

struct DecisionRecord {
    std::string customer_id;
    Decision decision = Decision::None;
    std::string expert;
    std::string timestamp;
    double score = 0.0;
};

nlohmann::json to_json(const DecisionRecord& r);
DecisionRecord decision_record_from_json(const nlohmann::json& j);

/// Append-only decision history, optionally persisted as JSON lines. The
/// latest record per customer is that customer's current decision.
class DecisionLog {
public:
    DecisionLog() = default;
    /// Replays an existing file (if any) and appends to it afterwards.
    explicit DecisionLog(std::filesystem::path path);

    /// Appends unless the customer's latest record already has the same
    /// decision and expert. Returns whether a record was written.
    bool append(const DecisionRecord& record);

    Decision current(const std::string& customer_id) const;
    const std::vector<DecisionRecord>& records() const noexcept { return records_; }

    /// Current decision per customer after applying `records` in order.
    static std::map<std::string, Decision> replay(const std::vector<DecisionRecord>& records);

private:
    std::optional<std::filesystem::path> path_;
    std::vector<DecisionRecord> records_;
    std::map<std::string, std::size_t> latest_;
};

/// One served customer: geodata, window and model score.
struct ServedCustomer {
    CustomerGeo geo;
    ConsumptionWindow window;
    double score = 0.0;
    std::vector<double> model_features; // in the model's feature order
};

struct ServiceResponse {
    int status = 200;
    nlohmann::json body;
};

/// Great-circle distance in meters (haversine, mean Earth radius).
double haversine_meters(const GeoPoint& a, const GeoPoint& b);

/// Request handling for the review UI, independent of the HTTP transport.
/// Reads may run concurrently; decisions are serialized through one writer.
class ReviewService {
public:
    using Clock = std::function<std::string()>;

    ReviewService(std::vector<ServedCustomer> customers, std::vector<std::string> model_features,
                  std::string model_kind, TrafficLightConfig lights, DecisionLog log, Clock clock = {});

    /// Scores every window that has geodata with `model`.
    static ReviewService build(const TrainedModel& model, const std::vector<CustomerGeo>& customers,
                               const WindowSet& windows, TrafficLightConfig lights, DecisionLog log,
                               Clock clock = {});

    /// GET /customers?bbox=minLon,minLat,maxLon,maxLat&offset=&limit=
    ServiceResponse list_customers(std::optional<std::string_view> bbox, std::optional<std::string_view> offset,
                                   std::optional<std::string_view> limit) const;
    /// GET /customers/{id}/profile?months=
    ServiceResponse profile(const std::string& id, std::optional<std::string_view> months) const;
    /// GET /customers/{id}/neighbors?radius=
    ServiceResponse neighbors(const std::string& id, std::optional<std::string_view> radius) const;
    /// POST /customers/{id}/decision with {"decision": ..., "expert": ...}
    ServiceResponse post_decision(const std::string& id, std::string_view body);
    /// GET /inspections/queue
    ServiceResponse queue() const;

    std::vector<CustomerRecord> records() const;
    std::size_t size() const noexcept { return customers_.size(); }
    const TrafficLightConfig& lights() const noexcept { return lights_; }
    std::vector<DecisionRecord> decision_history() const;

private:
    CustomerRecord record(std::size_t i) const; // caller holds the lock
    std::optional<std::size_t> index_of(const std::string& id) const;

    std::vector<ServedCustomer> customers_; // sorted by customer_id
    std::vector<std::string> model_features_;
    std::string model_kind_;
    TrafficLightConfig lights_;
    std::vector<double> feature_mean_, feature_std_;
    mutable std::shared_mutex mutex_;
    DecisionLog log_;
    Clock clock_;
};

/// Response schema tags.
inline constexpr std::string_view kCustomersSchema = "ntl.customers.v1";
inline constexpr std::string_view kProfileSchema = "ntl.profile.v1";
inline constexpr std::string_view kNeighborsSchema = "ntl.neighbors.v1";
inline constexpr std::string_view kDecisionSchema = "ntl.decision.v1";
inline constexpr std::string_view kQueueSchema = "ntl.queue.v1";

} // namespace ntl
