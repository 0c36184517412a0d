#include "ntl/hyperparams.hpp"

#include <cctype>

#include "ntl/error.hpp"

namespace ntl {

std::string_view to_string(ClassifierKind k) {
    switch (k) {
    case ClassifierKind::DT: return "DT";
    case ClassifierKind::RF: return "RF";
    case ClassifierKind::GBT: return "GBT";
    case ClassifierKind::LSVM: return "LSVM";
    }
    return "?";
}

std::optional<ClassifierKind> parse_classifier(std::string_view s) {
    std::string up;
    for (char ch : s) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    if (up == "DT") return ClassifierKind::DT;
    if (up == "RF") return ClassifierKind::RF;
    if (up == "GBT") return ClassifierKind::GBT;
    if (up == "LSVM") return ClassifierKind::LSVM;
    return std::nullopt;
}

std::string_view to_string(SplitCriterion c) { return c == SplitCriterion::Gini ? "gini" : "entropy"; }
std::string_view to_string(BoostLoss l) { return l == BoostLoss::Deviance ? "deviance" : "adaboost"; }

HyperParams default_params(ClassifierKind kind) {
    HyperParams p;
    p.kind = kind;
    if (kind == ClassifierKind::LSVM) {
        p.l2_reg = 0.01;
        return p;
    }
    p.max_leaves = 64;
    p.max_depth = 10;
    p.min_samples_leaf = 5;
    p.min_samples_split = 10;
    if (kind != ClassifierKind::GBT) p.criterion = SplitCriterion::Gini;
    if (kind != ClassifierKind::DT) p.n_estimators = bounds::kEstimators;
    if (kind == ClassifierKind::GBT) {
        p.learning_rate = 0.1;
        p.loss = BoostLoss::Deviance;
    }
    return p;
}

namespace {

template <typename T>
void require(const std::optional<T>& field, bool applies, std::string_view name, ClassifierKind kind) {
    if (applies && !field)
        throw ConfigError(std::string(name) + " is required for " + std::string(to_string(kind)));
    if (!applies && field)
        throw ConfigError(std::string(name) + " does not apply to " + std::string(to_string(kind)));
}

void in_range(int v, int lo, int end, std::string_view name) {
    if (v < lo || v >= end)
        throw ConfigError(std::string(name) + "=" + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                          std::to_string(end) + ")");
}

} // namespace

void validate(const HyperParams& p) {
    const bool tree = p.kind != ClassifierKind::LSVM;
    require(p.learning_rate, p.kind == ClassifierKind::GBT, "learning_rate", p.kind);
    require(p.loss, p.kind == ClassifierKind::GBT, "loss", p.kind);
    require(p.max_leaves, tree, "max_leaves", p.kind);
    require(p.max_depth, tree, "max_depth", p.kind);
    require(p.criterion, p.kind == ClassifierKind::DT || p.kind == ClassifierKind::RF, "criterion", p.kind);
    require(p.min_samples_leaf, tree, "min_samples_leaf", p.kind);
    require(p.min_samples_split, tree, "min_samples_split", p.kind);
    require(p.n_estimators, p.kind == ClassifierKind::RF || p.kind == ClassifierKind::GBT, "n_estimators", p.kind);
    require(p.l2_reg, p.kind == ClassifierKind::LSVM, "l2_reg", p.kind);

    using namespace bounds;
    if (p.learning_rate && !(*p.learning_rate >= kLearningRateMin && *p.learning_rate <= kLearningRateMax))
        throw ConfigError("learning_rate outside [0.0001, 1]");
    if (p.max_leaves) in_range(*p.max_leaves, kMaxLeavesMin, kMaxLeavesEnd, "max_leaves");
    if (p.max_depth) in_range(*p.max_depth, kMaxDepthMin, kMaxDepthEnd, "max_depth");
    if (p.min_samples_leaf) in_range(*p.min_samples_leaf, kMinSamplesLeafMin, kMinSamplesLeafEnd, "min_samples_leaf");
    if (p.min_samples_split)
        in_range(*p.min_samples_split, kMinSamplesSplitMin, kMinSamplesSplitEnd, "min_samples_split");
    if (p.n_estimators && *p.n_estimators != kEstimators) throw ConfigError("n_estimators must be 20");
    if (p.l2_reg && !(*p.l2_reg >= kL2Min && *p.l2_reg <= kL2Max)) throw ConfigError("l2_reg outside [0.001, 10]");
}

nlohmann::json to_json(const HyperParams& p) {
    nlohmann::json j;
    j["kind"] = to_string(p.kind);
    if (p.learning_rate) j["learning_rate"] = *p.learning_rate;
    if (p.loss) j["loss"] = to_string(*p.loss);
    if (p.max_leaves) j["max_leaves"] = *p.max_leaves;
    if (p.max_depth) j["max_depth"] = *p.max_depth;
    if (p.criterion) j["split_criterion"] = to_string(*p.criterion);
    if (p.min_samples_leaf) j["min_samples_leaf"] = *p.min_samples_leaf;
    if (p.min_samples_split) j["min_samples_split"] = *p.min_samples_split;
    if (p.n_estimators) j["n_estimators"] = *p.n_estimators;
    if (p.l2_reg) j["l2_reg"] = *p.l2_reg;
    return j;
}

HyperParams hyperparams_from_json(const nlohmann::json& j) {
    try {
        HyperParams p;
        auto kind = parse_classifier(j.at("kind").get<std::string>());
        if (!kind) throw SchemaError("unknown classifier kind");
        p.kind = *kind;
        if (j.contains("learning_rate")) p.learning_rate = j["learning_rate"].get<double>();
        if (j.contains("loss")) {
            const auto s = j["loss"].get<std::string>();
            if (s == "deviance") p.loss = BoostLoss::Deviance;
            else if (s == "adaboost") p.loss = BoostLoss::AdaBoost;
            else throw SchemaError("unknown loss '" + s + "'");
        }
        if (j.contains("max_leaves")) p.max_leaves = j["max_leaves"].get<int>();
        if (j.contains("max_depth")) p.max_depth = j["max_depth"].get<int>();
        if (j.contains("split_criterion")) {
            const auto s = j["split_criterion"].get<std::string>();
            if (s == "gini") p.criterion = SplitCriterion::Gini;
            else if (s == "entropy") p.criterion = SplitCriterion::Entropy;
            else throw SchemaError("unknown split criterion '" + s + "'");
        }
        if (j.contains("min_samples_leaf")) p.min_samples_leaf = j["min_samples_leaf"].get<int>();
        if (j.contains("min_samples_split")) p.min_samples_split = j["min_samples_split"].get<int>();
        if (j.contains("n_estimators")) p.n_estimators = j["n_estimators"].get<int>();
        if (j.contains("l2_reg")) p.l2_reg = j["l2_reg"].get<double>();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed hyperparameters: ") + e.what());
    }
}

} // namespace ntl
