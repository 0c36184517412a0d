#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace ntl {

enum class ClassifierKind { DT, RF, GBT, LSVM };
enum class SplitCriterion { Gini, Entropy };
enum class BoostLoss { Deviance, AdaBoost };

std::string_view to_string(ClassifierKind k);
std::optional<ClassifierKind> parse_classifier(std::string_view s); // "dt", "RF", ...
std::string_view to_string(SplitCriterion c);
std::string_view to_string(BoostLoss l);

/// Search-space bounds. Integer ranges are half-open like the parameter table
/// they come from: [lo, hi).
namespace bounds {
inline constexpr double kLearningRateMin = 1e-4, kLearningRateMax = 1.0;
inline constexpr int kMaxLeavesMin = 2, kMaxLeavesEnd = 1000;
inline constexpr int kMaxDepthMin = 1, kMaxDepthEnd = 50;
inline constexpr int kMinSamplesLeafMin = 1, kMinSamplesLeafEnd = 1000;
inline constexpr int kMinSamplesSplitMin = 2, kMinSamplesSplitEnd = 50;
inline constexpr int kEstimators = 20;
inline constexpr double kL2Min = 1e-3, kL2Max = 10.0;
} // namespace bounds

/// One point of the search space. Fields that do not apply to `kind` stay
/// empty; validate() enforces both the mask and the ranges.
struct HyperParams {
    ClassifierKind kind = ClassifierKind::DT;
    std::optional<double> learning_rate;       // GBT
    std::optional<BoostLoss> loss;             // GBT
    std::optional<int> max_leaves;             // DT, RF, GBT
    std::optional<int> max_depth;              // DT, RF, GBT
    std::optional<SplitCriterion> criterion;   // DT, RF
    std::optional<int> min_samples_leaf;       // DT, RF, GBT
    std::optional<int> min_samples_split;      // DT, RF, GBT
    std::optional<int> n_estimators;           // RF, GBT
    std::optional<double> l2_reg;              // LSVM

    bool operator==(const HyperParams&) const = default;
};

/// Reasonable mid-range settings, used by `ntl train` without a search.
HyperParams default_params(ClassifierKind kind);

/// Throws ConfigError when a field is missing, inapplicable or out of range.
void validate(const HyperParams& p);

nlohmann::json to_json(const HyperParams& p);
HyperParams hyperparams_from_json(const nlohmann::json& j);

} // namespace ntl
