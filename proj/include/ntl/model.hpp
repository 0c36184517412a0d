#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ntl/core_model.hpp"
#include "ntl/ensemble.hpp"
#include "ntl/hyperparams.hpp"
#include "ntl/linear_svm.hpp"
#include "ntl/tree.hpp"

namespace ntl {

struct TrainOptions {
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

/// A fitted classifier plus everything needed to score new customers.
struct TrainedModel {
    HyperParams params;
    std::vector<std::string> feature_names; // qualified, in training column order
    std::string catalogue_version;
    std::variant<DecisionTree, ForestModel, BoostedModel, LinearModel> state;
    std::vector<double> fold_aucs; // filled in by model selection when known

    ClassifierKind kind() const noexcept { return params.kind; }

    /// Score for a row already laid out in feature_names order.
    double score_row(std::span<const double> row) const;
};

/// Validates params and fits the matching learner with the dataset's class
/// weights. Throws ConfigError on invalid params and InvalidDataset when a
/// class is missing.
TrainedModel train_model(const LabeledDataset& data, const HyperParams& params, const TrainOptions& options = {});

TrainedModel train_decision_tree(const LabeledDataset& data, const HyperParams& params);
TrainedModel train_random_forest(const LabeledDataset& data, const HyperParams& params, const TrainOptions& options = {});
TrainedModel train_gradient_boosted_tree(const LabeledDataset& data, const HyperParams& params);
TrainedModel train_linear_svm(const LabeledDataset& data, const HyperParams& params, const TrainOptions& options = {});

/// Score in [0,1], higher = more NTL-like. The vector must carry exactly the
/// model's feature names; anything else is a SchemaError.
double predict(const TrainedModel& model, const FeatureVector& features);

/// Scores every row; the matrix must contain every model feature (extra
/// columns are ignored).
std::vector<double> predict(const TrainedModel& model, const FeatureMatrix& matrix);

/// Restricts a full feature vector to the model's features.
FeatureVector project(const FeatureVector& features, const std::vector<std::string>& names);

nlohmann::json to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);
void write_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel read_model(const std::filesystem::path& path);

} // namespace ntl
