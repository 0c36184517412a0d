#include "ntl/model.hpp"

#include <fstream>
#include <set>

#include "ntl/features.hpp"

namespace ntl {

namespace {

void require_kind(const HyperParams& p, ClassifierKind kind) {
    if (p.kind != kind)
        throw ConfigError("expected " + std::string(to_string(kind)) + " parameters, got " +
                          std::string(to_string(p.kind)));
    validate(p);
}

TrainedModel shell(const LabeledDataset& data, const HyperParams& params) {
    if (data.size() == 0) throw InvalidDataset("cannot train on an empty dataset");
    const auto pos = data.positives();
    if (pos == 0 || pos == data.size()) throw InvalidDataset("training data needs both classes");
    TrainedModel m;
    m.params = params;
    m.feature_names = data.matrix.qualified_names();
    m.catalogue_version = std::string(kCatalogueVersion);
    return m;
}

} // namespace

double TrainedModel::score_row(std::span<const double> row) const {
    return std::visit([&](const auto& s) { return s.predict(row); }, state);
}

TrainedModel train_decision_tree(const LabeledDataset& data, const HyperParams& params) {
    require_kind(params, ClassifierKind::DT);
    auto m = shell(data, params);
    const ColumnStore x(data.matrix);
    const auto w = data.sample_weights();
    const std::vector<double> counts(data.size(), 1.0);
    m.state = grow_classification_tree(x, data.labels, w, counts, tree_params(params));
    return m;
}

TrainedModel train_random_forest(const LabeledDataset& data, const HyperParams& params, const TrainOptions& options) {
    require_kind(params, ClassifierKind::RF);
    auto m = shell(data, params);
    const ColumnStore x(data.matrix);
    ForestOptions fo;
    fo.n_trees = static_cast<std::size_t>(*params.n_estimators);
    fo.threads = options.threads;
    m.state = train_forest(x, data.labels, data.sample_weights(), tree_params(params), fo, options.seed);
    return m;
}

TrainedModel train_gradient_boosted_tree(const LabeledDataset& data, const HyperParams& params) {
    require_kind(params, ClassifierKind::GBT);
    auto m = shell(data, params);
    const ColumnStore x(data.matrix);
    m.state = train_boosted(x, data.labels, data.sample_weights(), tree_params(params), *params.loss,
                            *params.learning_rate, static_cast<std::size_t>(*params.n_estimators));
    return m;
}

TrainedModel train_linear_svm(const LabeledDataset& data, const HyperParams& params, const TrainOptions& options) {
    require_kind(params, ClassifierKind::LSVM);
    auto m = shell(data, params);
    const ColumnStore x(data.matrix);
    m.state = train_linear_svm(x, data.labels, data.sample_weights(), *params.l2_reg, options.seed);
    return m;
}

TrainedModel train_model(const LabeledDataset& data, const HyperParams& params, const TrainOptions& options) {
    switch (params.kind) {
    case ClassifierKind::DT: return train_decision_tree(data, params);
    case ClassifierKind::RF: return train_random_forest(data, params, options);
    case ClassifierKind::GBT: return train_gradient_boosted_tree(data, params);
    case ClassifierKind::LSVM: return train_linear_svm(data, params, options);
    }
    throw ConfigError("unknown classifier kind");
}

double predict(const TrainedModel& model, const FeatureVector& features) {
    if (features.values.size() != model.feature_names.size())
        throw SchemaError("feature vector has " + std::to_string(features.values.size()) + " features, model expects " +
                          std::to_string(model.feature_names.size()));
    std::vector<double> row;
    row.reserve(model.feature_names.size());
    for (const auto& name : model.feature_names) {
        auto it = features.values.find(name);
        if (it == features.values.end()) throw SchemaError("feature vector lacks '" + name + "'");
        row.push_back(it->second);
    }
    return model.score_row(row);
}

std::vector<double> predict(const TrainedModel& model, const FeatureMatrix& matrix) {
    std::vector<std::size_t> cols;
    cols.reserve(model.feature_names.size());
    for (const auto& name : model.feature_names) {
        auto c = matrix.find(name);
        if (!c) throw SchemaError("matrix lacks model feature '" + name + "'");
        cols.push_back(*c);
    }
    std::vector<double> scores(matrix.rows());
    std::vector<double> row(cols.size());
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        for (std::size_t k = 0; k < cols.size(); ++k) row[k] = matrix.at(r, cols[k]);
        scores[r] = model.score_row(row);
    }
    return scores;
}

FeatureVector project(const FeatureVector& features, const std::vector<std::string>& names) {
    FeatureVector out;
    for (const auto& name : names) {
        auto it = features.values.find(name);
        if (it == features.values.end()) throw SchemaError("feature vector lacks '" + name + "'");
        out.values.emplace(name, it->second);
        if (auto s = features.specs.find(name); s != features.specs.end()) out.specs.emplace(name, s->second);
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON artifact

namespace {

nlohmann::json tree_to_json(const DecisionTree& tree, int id = 0) {
    const auto& n = tree.nodes()[static_cast<std::size_t>(id)];
    if (n.is_leaf()) return {{"leaf", n.value}};
    return {{"feature", n.feature},
            {"threshold", n.threshold},
            {"left", tree_to_json(tree, n.left)},
            {"right", tree_to_json(tree, n.right)}};
}

int tree_from_json(const nlohmann::json& j, std::vector<TreeNode>& nodes, std::size_t n_features, int depth = 0) {
    if (depth > 10000) throw SchemaError("tree too deep");
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    if (j.contains("leaf")) {
        nodes[static_cast<std::size_t>(id)].value = j.at("leaf").get<double>();
        return id;
    }
    const int feature = j.at("feature").get<int>();
    if (feature < 0 || static_cast<std::size_t>(feature) >= n_features)
        throw SchemaError("tree node references feature " + std::to_string(feature));
    nodes[static_cast<std::size_t>(id)].feature = feature;
    nodes[static_cast<std::size_t>(id)].threshold = j.at("threshold").get<double>();
    const int l = tree_from_json(j.at("left"), nodes, n_features, depth + 1);
    const int r = tree_from_json(j.at("right"), nodes, n_features, depth + 1);
    nodes[static_cast<std::size_t>(id)].left = l;
    nodes[static_cast<std::size_t>(id)].right = r;
    return id;
}

DecisionTree read_tree(const nlohmann::json& j, std::size_t n_features) {
    std::vector<TreeNode> nodes;
    tree_from_json(j, nodes, n_features);
    return DecisionTree(std::move(nodes));
}

} // namespace

nlohmann::json to_json(const TrainedModel& model) {
    nlohmann::json j;
    j["schema"] = "ntl.model.v1";
    j["kind"] = to_string(model.kind());
    j["params"] = to_json(model.params);
    j["catalogue_version"] = model.catalogue_version;
    j["features"] = model.feature_names;
    if (!model.fold_aucs.empty()) j["fold_aucs"] = model.fold_aucs;
    nlohmann::json state;
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, DecisionTree>) {
                state["tree"] = tree_to_json(s);
            } else if constexpr (std::is_same_v<T, ForestModel>) {
                state["trees"] = nlohmann::json::array();
                for (const auto& t : s.trees) state["trees"].push_back(tree_to_json(t));
            } else if constexpr (std::is_same_v<T, BoostedModel>) {
                state["loss"] = to_string(s.loss);
                state["learning_rate"] = s.learning_rate;
                state["base_score"] = s.base_score;
                state["trees"] = nlohmann::json::array();
                for (const auto& t : s.trees) state["trees"].push_back(tree_to_json(t));
            } else {
                state["weights"] = s.weights;
                state["bias"] = s.bias;
                state["mean"] = s.mean;
                state["scale"] = s.scale;
            }
        },
        model.state);
    j["state"] = state;
    return j;
}

TrainedModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema") != "ntl.model.v1") throw SchemaError("unsupported model schema");
        TrainedModel m;
        m.params = hyperparams_from_json(j.at("params"));
        validate(m.params);
        m.catalogue_version = j.at("catalogue_version").get<std::string>();
        m.feature_names = j.at("features").get<std::vector<std::string>>();
        if (std::set<std::string>(m.feature_names.begin(), m.feature_names.end()).size() != m.feature_names.size())
            throw SchemaError("duplicate feature names in model");
        if (j.contains("fold_aucs")) m.fold_aucs = j["fold_aucs"].get<std::vector<double>>();
        const auto& s = j.at("state");
        const std::size_t nf = m.feature_names.size();
        switch (m.params.kind) {
        case ClassifierKind::DT: m.state = read_tree(s.at("tree"), nf); break;
        case ClassifierKind::RF: {
            ForestModel f;
            for (const auto& t : s.at("trees")) f.trees.push_back(read_tree(t, nf));
            m.state = std::move(f);
            break;
        }
        case ClassifierKind::GBT: {
            BoostedModel b;
            b.loss = s.at("loss") == "adaboost" ? BoostLoss::AdaBoost : BoostLoss::Deviance;
            b.learning_rate = s.at("learning_rate").get<double>();
            b.base_score = s.at("base_score").get<double>();
            for (const auto& t : s.at("trees")) b.trees.push_back(read_tree(t, nf));
            m.state = std::move(b);
            break;
        }
        case ClassifierKind::LSVM: {
            LinearModel l;
            l.weights = s.at("weights").get<std::vector<double>>();
            l.bias = s.at("bias").get<double>();
            l.mean = s.at("mean").get<std::vector<double>>();
            l.scale = s.at("scale").get<std::vector<double>>();
            if (l.weights.size() != nf || l.mean.size() != nf || l.scale.size() != nf)
                throw SchemaError("linear model size does not match its feature list");
            m.state = std::move(l);
            break;
        }
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed model artifact: ") + e.what());
    }
}

void write_model(const std::filesystem::path& path, const TrainedModel& model) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << to_json(model).dump() << '\n';
}

TrainedModel read_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("cannot parse model: ") + e.what());
    }
    return model_from_json(j);
}

} // namespace ntl
