#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ntl/core_model.hpp"

namespace ntl {

/// Raw meter readings grouped by customer, each list sorted by date.
using ReadingHistory = std::map<std::string, std::vector<Reading>>;

struct WindowLoadResult {
    std::vector<ConsumptionWindow> windows;      // sorted by customer_id
    std::vector<std::string> excluded_customers; // too short, gaps, or stale
    std::size_t excluded() const noexcept { return excluded_customers.size(); }
};

/// Parses `customer_id,reading_date,consumption_kwh`. Rows may come in any
/// order. Throws ParseError for malformed rows and ValidationError for
/// negative consumption, both naming the 1-based line number.
ReadingHistory read_readings_csv(std::istream& in);

/// Cuts one complete window of `months` intervals per customer.
///
/// A window is the last months+1 readings (the oldest only supplies the
/// boundary date) and is complete when those readings fall in consecutive
/// calendar months. With inspections, only readings strictly before the
/// inspection date count, the last one must lie in the inspection month or
/// the month before it, and customers without an inspection are excluded.
WindowLoadResult build_windows(const ReadingHistory& history, int months,
                               const std::vector<InspectionLabel>* inspections = nullptr);

WindowLoadResult load_readings(const std::filesystem::path& path, int months,
                               const std::vector<InspectionLabel>* inspections = nullptr);
WindowLoadResult load_readings(std::istream& in, int months,
                               const std::vector<InspectionLabel>* inspections = nullptr);

/// Writes windows back as readings CSV; the boundary row carries 0 kWh.
void write_readings(std::ostream& out, const std::vector<ConsumptionWindow>& windows);
void write_reading_history(std::ostream& out, const ReadingHistory& history);

/// Keeps only the latest inspection per customer; result sorted by id.
std::vector<InspectionLabel> load_inspections(std::istream& in);
std::vector<InspectionLabel> load_inspections(const std::filesystem::path& path);
void write_inspections(std::ostream& out, const std::vector<InspectionLabel>& labels);

std::vector<CustomerGeo> load_customers(std::istream& in);
std::vector<CustomerGeo> load_customers(const std::filesystem::path& path);
void write_customers(std::ostream& out, const std::vector<CustomerGeo>& customers);

/// Windows plus their inspection outcome (-1 when unlabeled).
struct WindowSet {
    int months = kDefaultWindowMonths;
    std::vector<ConsumptionWindow> windows;
    std::vector<int> outcomes;
};

/// Joins windows with labels by customer id.
WindowSet attach_labels(int months, std::vector<ConsumptionWindow> windows,
                        const std::vector<InspectionLabel>& labels);

/// Little-endian binary store: magic "NTLW", version, months, count, then
/// per window id, label date, outcome, N+1 day numbers and N doubles.
void write_window_set(const std::filesystem::path& path, const WindowSet& set);
WindowSet read_window_set(const std::filesystem::path& path);

enum class Anomaly { None, StepDrop, Decay, UnderRecording };
std::string_view to_string(Anomaly a);

struct SynthConfig {
    std::size_t n_customers = 1000;
    double ntl_fraction = 1.0 / 3.0;
    int n_months = kDefaultWindowMonths + 1; // readings per customer
    int window_months = kDefaultWindowMonths;
    int n_neighborhoods = 20;
    double neighborhood_ntl_boost = 0.0;
    double hot_neighborhood_fraction = 0.2;
    double seasonal_amplitude = 0.25;
    double noise_sigma = 0.08;
    double benign_shift_fraction = 0.05;
    std::uint64_t rng_seed = 7;
    Date start_date = Date{std::chrono::year{2014} / 1 / 1};
    GeoPoint town_center{-22.90, -43.20};
};

/// Throws ConfigError when a field is out of range.
void validate(const SynthConfig& config);

/// Reads a flat TOML table whose keys are SynthConfig field names.
SynthConfig load_synth_config(const std::filesystem::path& path);

struct SyntheticData {
    ReadingHistory readings;
    std::vector<InspectionLabel> labels;    // sorted by id
    std::vector<CustomerGeo> customers;     // sorted by id
    std::map<std::string, Anomaly> anomaly; // planted pattern per customer
    std::vector<std::string> hot_neighborhoods;
};

/// Deterministic for a fixed seed. The positive count is exactly
/// round(ntl_fraction * n_customers); positives are drawn without
/// replacement, with hot-neighborhood customers weighted 1 + boost.
SyntheticData generate_synthetic(const SynthConfig& config);

/// Writes readings.csv, inspections.csv and customers.csv into `dir`.
void write_synthetic(const std::filesystem::path& dir, const SyntheticData& data);

} // namespace ntl
