// ntl: command-line front end for the detection pipeline.

#include <CLI11.hpp>
#include <httplib.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "ntl/features.hpp"
#include "ntl/http_server.hpp"
#include "ntl/ingest.hpp"
#include "ntl/model.hpp"
#include "ntl/model_select.hpp"
#include "ntl/stats_select.hpp"
#include "ntl/text.hpp"

namespace fs = std::filesystem;
using namespace ntl;

namespace {

std::vector<FeatureFamily> parse_families(const std::string& text) {
    std::vector<FeatureFamily> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = std::min(text.find('+', start), text.size());
        const auto token = text.substr(start, end - start);
        auto f = parse_family(token);
        if (!f) throw ConfigError("unknown feature family '" + token + "' (expected AVG, DIF or GTS)");
        if (std::find(out.begin(), out.end(), *f) == out.end()) out.push_back(*f);
        start = end + 1;
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string family_label(const std::vector<FeatureFamily>& families) {
    std::string s;
    for (auto f : families) s += (s.empty() ? "" : "+") + std::string(to_string(f));
    return s;
}

/// Columns of `m` in `families`, optionally restricted to `retained`.
FeatureMatrix feature_set(const FeatureMatrix& m, const std::vector<FeatureFamily>& families,
                          const std::vector<std::string>* retained) {
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < m.cols(); ++c) {
        const auto& spec = m.columns()[c];
        if (std::find(families.begin(), families.end(), spec.family) == families.end()) continue;
        if (retained && std::find(retained->begin(), retained->end(), spec.qualified()) == retained->end()) continue;
        cols.push_back(c);
    }
    return m.select_columns(cols);
}

FeatureMatrix columns_by_name(const FeatureMatrix& m, const std::vector<std::string>& names) {
    std::vector<std::size_t> cols;
    for (const auto& n : names) {
        auto c = m.find(n);
        if (!c) throw SchemaError("matrix lacks feature '" + n + "'");
        cols.push_back(*c);
    }
    return m.select_columns(cols);
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

struct SynthArgs {
    std::string config, out;
};

int run_synth(const SynthArgs& a) {
    const SynthConfig cfg = a.config.empty() ? SynthConfig{} : load_synth_config(a.config);
    const auto data = generate_synthetic(cfg);
    write_synthetic(a.out, data);
    std::size_t pos = 0;
    for (const auto& l : data.labels) pos += l.outcome;
    std::cout << "wrote " << data.customers.size() << " customers (" << pos << " NTL) to " << a.out << '\n';
    return 0;
}

struct IngestArgs {
    std::string readings, inspections, customers, out;
    int months = kDefaultWindowMonths;
};

int run_ingest(const IngestArgs& a) {
    std::vector<InspectionLabel> labels;
    if (!a.inspections.empty()) labels = load_inspections(a.inspections);
    auto loaded = load_readings(a.readings, a.months, a.inspections.empty() ? nullptr : &labels);
    auto set = attach_labels(a.months, std::move(loaded.windows), labels);
    if (!a.customers.empty()) {
        // Keep only customers with geodata so that the service can place them.
        std::vector<std::string> known;
        for (const auto& c : load_customers(a.customers)) known.push_back(c.customer_id);
        std::sort(known.begin(), known.end());
        WindowSet kept;
        kept.months = set.months;
        for (std::size_t i = 0; i < set.windows.size(); ++i) {
            if (!std::binary_search(known.begin(), known.end(), set.windows[i].customer_id())) {
                loaded.excluded_customers.push_back(set.windows[i].customer_id());
                continue;
            }
            kept.windows.push_back(set.windows[i]);
            kept.outcomes.push_back(set.outcomes[i]);
        }
        set = std::move(kept);
    }
    write_window_set(a.out, set);
    std::cout << "windows: " << set.windows.size() << ", excluded customers: " << loaded.excluded() << '\n';
    return 0;
}

struct FeaturesArgs {
    std::string in, out, labels_out;
    unsigned threads = 0;
};

int run_features(const FeaturesArgs& a) {
    const auto set = read_window_set(a.in);
    const auto m = build_feature_matrix(set.windows, set.months, a.threads);
    write_matrix_csv(fs::path(a.out), m);
    if (!a.labels_out.empty()) {
        std::vector<std::string> ids;
        std::vector<int> y;
        for (std::size_t i = 0; i < set.windows.size(); ++i) {
            if (set.outcomes[i] < 0) continue;
            ids.push_back(set.windows[i].customer_id());
            y.push_back(set.outcomes[i]);
        }
        write_labels_csv(fs::path(a.labels_out), ids, y);
    }
    std::cout << m.rows() << " rows x " << m.cols() << " features\n";
    return 0;
}

struct SelectArgs {
    std::string matrix, labels, out, correction = "BY";
    double alpha = 0.05;
    unsigned threads = 0;
};

int run_select(const SelectArgs& a) {
    const auto m = read_matrix_csv(fs::path(a.matrix));
    const auto y = read_labels_csv(fs::path(a.labels), m.row_ids());
    SelectionOptions opt;
    opt.alpha = a.alpha;
    auto c = parse_correction(a.correction);
    if (!c) throw ConfigError("unknown correction '" + a.correction + "'");
    opt.correction = *c;
    opt.threads = a.threads;
    const auto report = select_features(m, y, opt);
    write_selection_report(a.out, report);
    std::printf("%-4s %8s %8s\n", "fam", "before", "after");
    for (const auto& [fam, tally] : report.counts)
        std::printf("%-4s %8zu %8zu\n", std::string(to_string(fam)).c_str(), tally.before, tally.after);
    return 0;
}

struct SearchArgs {
    std::string matrix, labels, report, out;
    std::vector<std::string> classifiers{"rf"};
    std::vector<std::string> sets{"AVG+DIF+GTS"};
    std::size_t candidates = 100, folds = 10;
    std::uint64_t seed = 42;
    unsigned threads = 0;
};

int run_search_cmd(const SearchArgs& a) {
    const auto m = read_matrix_csv(fs::path(a.matrix));
    const auto y = read_labels_csv(fs::path(a.labels), m.row_ids());
    std::optional<std::vector<std::string>> retained;
    if (!a.report.empty()) retained = read_selection_report(a.report).retained_names();

    nlohmann::json runs = nlohmann::json::array();
    struct Row {
        std::string clf, set, which;
        std::string auc;
        std::size_t n_features;
    };
    std::vector<Row> board;
    for (const auto& clf_name : a.classifiers) {
        auto kind = parse_classifier(clf_name);
        if (!kind) throw ConfigError("unknown classifier '" + clf_name + "'");
        for (const auto& set_text : a.sets) {
            const auto families = parse_families(set_text);
            for (int pass = 0; pass < (retained ? 2 : 1); ++pass) {
                const auto sub = feature_set(m, families, pass ? &*retained : nullptr);
                Row row{std::string(to_string(*kind)), family_label(families), pass ? "retained" : "all", "-",
                        sub.cols()};
                nlohmann::json run{{"classifier", row.clf},
                                   {"feature_set", row.set},
                                   {"selection", row.which},
                                   {"n_features", sub.cols()}};
                if (sub.cols() == 0) {
                    run["result"] = nullptr;
                } else {
                    SearchOptions opt;
                    opt.n_candidates = a.candidates;
                    opt.k = a.folds;
                    opt.seed = a.seed;
                    opt.threads = a.threads;
                    const auto result = run_search(make_labeled_dataset(sub, y), *kind, opt);
                    if (result.winner) {
                        char buf[32];
                        std::snprintf(buf, sizeof buf, "%.5f", result.best().mean_auc);
                        row.auc = buf;
                    }
                    run["result"] = to_json(result);
                }
                runs.push_back(std::move(run));
                board.push_back(std::move(row));
            }
        }
    }
    write_json(a.out, {{"schema", "ntl.leaderboard.v1"}, {"runs", runs}});

    std::printf("%-5s %-12s %-9s %6s %9s\n", "clf", "features", "subset", "n", "mean_auc");
    for (const auto& r : board)
        std::printf("%-5s %-12s %-9s %6zu %9s\n", r.clf.c_str(), r.set.c_str(), r.which.c_str(), r.n_features,
                    r.auc.c_str());
    return 0;
}

struct TrainArgs {
    std::string matrix, labels, search, clf = "rf", params, report, families = "AVG+DIF+GTS", out;
    std::uint64_t seed = 42;
    unsigned threads = 0;
};

int run_train(const TrainArgs& a) {
    const auto m = read_matrix_csv(fs::path(a.matrix));
    const auto y = read_labels_csv(fs::path(a.labels), m.row_ids());
    HyperParams params;
    FeatureMatrix x;
    std::vector<double> fold_aucs;
    if (!a.search.empty()) {
        // Best winner across every run of the leaderboard file.
        const auto j = read_json(a.search);
        const nlohmann::json* best = nullptr;
        for (const auto& run : j.at("runs")) {
            const auto& r = run.at("result");
            if (r.is_null() || r.at("winner").is_null()) continue;
            if (!best || r["winner"]["mean_auc"].get<double>() > (*best)["winner"]["mean_auc"].get<double>())
                best = &r;
        }
        if (!best) throw InvalidDataset("search file has no successful run");
        params = hyperparams_from_json((*best)["winner"]["params"]);
        x = columns_by_name(m, (*best)["features"].get<std::vector<std::string>>());
        const auto idx = (*best)["winner"]["index"].get<std::size_t>();
        fold_aucs = (*best)["candidates"][idx]["fold_aucs"].get<std::vector<double>>();
    } else {
        auto kind = parse_classifier(a.clf);
        if (!kind) throw ConfigError("unknown classifier '" + a.clf + "'");
        params = a.params.empty() ? default_params(*kind) : hyperparams_from_json(read_json(a.params));
        if (params.kind != *kind) throw ConfigError("parameter file is for a different classifier");
        std::optional<std::vector<std::string>> retained;
        if (!a.report.empty()) retained = read_selection_report(a.report).retained_names();
        x = feature_set(m, parse_families(a.families), retained ? &*retained : nullptr);
    }
    if (x.cols() == 0) throw InvalidDataset("no features left to train on");
    TrainOptions to;
    to.seed = a.seed;
    to.threads = a.threads;
    auto model = train_model(make_labeled_dataset(std::move(x), y), params, to);
    model.fold_aucs = std::move(fold_aucs);
    write_model(a.out, model);
    std::cout << "trained " << to_string(model.kind()) << " on " << model.feature_names.size() << " features\n";
    return 0;
}

struct PredictArgs {
    std::string model, windows, matrix, out;
};

int run_predict(const PredictArgs& a) {
    const auto model = read_model(a.model);
    FeatureMatrix m;
    if (!a.windows.empty()) {
        const auto set = read_window_set(a.windows);
        m = build_feature_matrix(set.windows, set.months);
    } else {
        m = read_matrix_csv(fs::path(a.matrix));
    }
    const auto scores = predict(model, m);
    std::ofstream file;
    if (!a.out.empty()) {
        file.open(a.out);
        if (!file) throw InvalidInput("cannot write " + a.out);
    }
    std::ostream& out = a.out.empty() ? std::cout : file;
    out << "customer_id,score\n";
    for (std::size_t i = 0; i < scores.size(); ++i) out << m.row_ids()[i] << ',' << format_double(scores[i]) << '\n';
    return 0;
}

struct ServeArgs {
    std::string model, customers, windows, decisions, static_dir, host = "0.0.0.0";
    int port = 8080;
    double threshold = 0.5, band = 0.1;
};

int run_serve(const ServeArgs& a) {
    const auto model = read_model(a.model);
    const auto customers = load_customers(a.customers);
    const auto windows = read_window_set(a.windows);
    DecisionLog log = a.decisions.empty() ? DecisionLog{} : DecisionLog(fs::path(a.decisions));
    auto service = ReviewService::build(model, customers, windows, {a.threshold, a.band}, std::move(log));
    std::optional<fs::path> static_dir;
    if (!a.static_dir.empty()) static_dir = a.static_dir;
    auto server = make_http_server(service, static_dir);
    std::cout << "serving " << service.size() << " customers on " << a.host << ':' << a.port << std::endl;
    if (!server->listen(a.host, a.port)) throw InvalidInput("cannot listen on port " + std::to_string(a.port));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Non-technical loss detection pipeline"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Generate a synthetic town");
    s->add_option("--config", synth.config, "TOML generator config")->check(CLI::ExistingFile);
    s->add_option("--out", synth.out, "Output directory")->required();

    IngestArgs ingest;
    auto* i = app.add_subcommand("ingest", "Cut consumption windows from readings");
    i->add_option("--readings", ingest.readings)->required()->check(CLI::ExistingFile);
    i->add_option("--inspections", ingest.inspections)->check(CLI::ExistingFile);
    i->add_option("--customers", ingest.customers)->check(CLI::ExistingFile);
    i->add_option("--n", ingest.months, "Window length in months")->check(CLI::Range(13, 600));
    i->add_option("--out", ingest.out)->required();

    FeaturesArgs features;
    auto* f = app.add_subcommand("features", "Extract the feature matrix");
    f->add_option("--in", features.in)->required()->check(CLI::ExistingFile);
    f->add_option("--out", features.out)->required();
    f->add_option("--labels-out", features.labels_out, "Also write labels.csv for labeled windows");
    f->add_option("--threads", features.threads);

    SelectArgs select;
    auto* se = app.add_subcommand("select", "Hypothesis-test feature selection");
    se->add_option("--matrix", select.matrix)->required()->check(CLI::ExistingFile);
    se->add_option("--labels", select.labels)->required()->check(CLI::ExistingFile);
    se->add_option("--alpha", select.alpha);
    se->add_option("--correction", select.correction, "BY or none");
    se->add_option("--out", select.out)->required();
    se->add_option("--threads", select.threads);

    SearchArgs search;
    auto* sr = app.add_subcommand("search", "Randomized search with cross-validation");
    sr->add_option("--matrix", search.matrix)->required()->check(CLI::ExistingFile);
    sr->add_option("--labels", search.labels)->required()->check(CLI::ExistingFile);
    sr->add_option("--report", search.report, "Selection report; adds retained-feature runs")
        ->check(CLI::ExistingFile);
    sr->add_option("--clf", search.classifiers, "dt, rf, gbt, lsvm (repeatable)")->delimiter(',');
    sr->add_option("--sets", search.sets, "Feature sets such as AVG,DIF+AVG,AVG+DIF+GTS")->delimiter(',');
    sr->add_option("--candidates", search.candidates)->check(CLI::PositiveNumber);
    sr->add_option("--folds", search.folds);
    sr->add_option("--seed", search.seed);
    sr->add_option("--threads", search.threads);
    sr->add_option("--out", search.out)->required();

    TrainArgs train;
    auto* t = app.add_subcommand("train", "Fit one model");
    t->add_option("--matrix", train.matrix)->required()->check(CLI::ExistingFile);
    t->add_option("--labels", train.labels)->required()->check(CLI::ExistingFile);
    t->add_option("--search", train.search, "Take parameters and features from the best search run")
        ->check(CLI::ExistingFile);
    t->add_option("--clf", train.clf);
    t->add_option("--params", train.params, "Hyperparameter JSON")->check(CLI::ExistingFile);
    t->add_option("--report", train.report, "Restrict to retained features")->check(CLI::ExistingFile);
    t->add_option("--sets", train.families, "Feature families, e.g. AVG+DIF");
    t->add_option("--seed", train.seed);
    t->add_option("--threads", train.threads);
    t->add_option("--out", train.out)->required();

    PredictArgs pred;
    auto* p = app.add_subcommand("predict", "Score customers");
    p->add_option("--model", pred.model)->required()->check(CLI::ExistingFile);
    auto* pw = p->add_option("--windows", pred.windows)->check(CLI::ExistingFile);
    auto* pm = p->add_option("--matrix", pred.matrix)->check(CLI::ExistingFile);
    pw->excludes(pm);
    p->add_option("--out", pred.out, "CSV output (stdout if omitted)");

    ServeArgs serve;
    auto* sv = app.add_subcommand("serve", "Serve the review API");
    sv->add_option("--model", serve.model)->required()->check(CLI::ExistingFile);
    sv->add_option("--customers", serve.customers)->required()->check(CLI::ExistingFile);
    sv->add_option("--windows", serve.windows)->required()->check(CLI::ExistingFile);
    sv->add_option("--decisions", serve.decisions, "JSON-lines decision log");
    sv->add_option("--static", serve.static_dir, "UI bundle directory");
    sv->add_option("--host", serve.host);
    sv->add_option("--port", serve.port);
    sv->add_option("--threshold", serve.threshold);
    sv->add_option("--band", serve.band);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*s) return run_synth(synth);
        if (*i) return run_ingest(ingest);
        if (*f) return run_features(features);
        if (*se) return run_select(select);
        if (*sr) return run_search_cmd(search);
        if (*t) return run_train(train);
        if (*p) {
            if (pred.windows.empty() && pred.matrix.empty()) throw ConfigError("predict needs --windows or --matrix");
            return run_predict(pred);
        }
        if (*sv) return run_serve(serve);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
