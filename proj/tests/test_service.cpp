#include <catch_amalgamated.hpp>

#include <fstream>
#include <numeric>
#include <thread>

#include <httplib.h>

#include "ntl/error.hpp"
#include "ntl/features.hpp"
#include "ntl/http_server.hpp"
#include "ntl/ingest.hpp"
#include "ntl/model.hpp"
#include "ntl/service.hpp"
#include "test_support.hpp"

using namespace ntl;
using ntl::testing::monthly_window;
using ntl::testing::TempDir;
using Catch::Matchers::WithinAbs;

namespace {

std::string fixed_clock() { return "2020-01-01T00:00:00Z"; }

ServedCustomer served(const std::string& id, double lat, double lon, double score, double level = 100.0) {
    std::vector<double> c(24);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = level + static_cast<double>(i);
    return {{id, {lat, lon}, "n1"}, monthly_window(id, c), score, {score * 10.0, level}};
}

// Five customers along a meridian, about 111 m apart.
ReviewService small_service(DecisionLog log = {}) {
    std::vector<ServedCustomer> cs{
        served("c3", 10.000, 20.0, 0.95),  // irregular
        served("c1", 10.001, 20.0, 0.10),  // regular
        served("c2", 10.002, 20.0, 0.55),  // suspicious
        served("c5", 10.003, 20.0, 0.80),  // irregular
        served("c4", 10.004, 20.0, 0.80),  // irregular, ties with c5
    };
    return ReviewService(std::move(cs), {"GTS:a", "AVG:b"}, "RF", {}, std::move(log), fixed_clock);
}

std::vector<std::string> ids_of(const nlohmann::json& list) {
    std::vector<std::string> out;
    for (const auto& c : list) out.push_back(c["customer_id"]);
    return out;
}

struct Town {
    SyntheticData data;
    WindowSet windows;
    TrainedModel model;
};

const Town& town() {
    static const Town t = [] {
        SynthConfig cfg;
        cfg.n_customers = 2000;
        cfg.neighborhood_ntl_boost = 3.0;
        cfg.rng_seed = 5;
        Town out;
        out.data = generate_synthetic(cfg);
        auto r = build_windows(out.data.readings, cfg.window_months, &out.data.labels);
        out.windows = attach_labels(cfg.window_months, std::move(r.windows), out.data.labels);
        auto m = build_feature_matrix(out.windows.windows, cfg.window_months);
        auto d = make_labeled_dataset(filter_families(m, std::vector{FeatureFamily::AVG}), out.windows.outcomes);
        out.model = train_model(d, default_params(ClassifierKind::RF), {1, 1});
        return out;
    }();
    return t;
}

} // namespace

TEST_CASE("traffic light partition") {
    const TrafficLightConfig c{0.5, 0.1};
    CHECK(classify(0.5, c) == Status::Suspicious);
    CHECK(classify(0.4, c) == Status::Suspicious);
    CHECK(classify(0.6, c) == Status::Suspicious);
    CHECK(classify(0.61, c) == Status::Irregular);
    CHECK(classify(0.39, c) == Status::Regular);
    CHECK(classify(0.7, {0.5, 0.0}) == Status::Irregular);
    CHECK(classify(0.5, {0.5, 0.0}) == Status::Suspicious);
    CHECK_THROWS_AS(validate(TrafficLightConfig{0.0, 0.1}), ConfigError);
    CHECK_THROWS_AS(validate(TrafficLightConfig{0.5, -0.1}), ConfigError);

    Rng rng(3);
    for (int i = 0; i < 10000; ++i) {
        const TrafficLightConfig cfg{rng.uniform(0.01, 0.99), rng.uniform(0.0, 0.5)};
        const double s = rng.uniform();
        const bool sus = std::abs(s - cfg.threshold) <= cfg.band;
        const bool irr = s > cfg.threshold + cfg.band;
        const bool reg = s < cfg.threshold - cfg.band;
        REQUIRE(sus + irr + reg == 1);
        const auto st = classify(s, cfg);
        CHECK((st == Status::Suspicious) == sus);
        CHECK((st == Status::Irregular) == irr);
        CHECK((st == Status::Regular) == reg);
    }
}

TEST_CASE("customer list paging and bbox") {
    const auto svc = small_service();
    auto all = svc.list_customers(std::nullopt, std::nullopt, std::nullopt);
    REQUIRE(all.status == 200);
    CHECK(all.body["schema"] == "ntl.customers.v1");
    CHECK(all.body["total"] == 5);
    CHECK(ids_of(all.body["customers"]) == std::vector<std::string>{"c1", "c2", "c3", "c4", "c5"});
    CHECK(all.body["customers"][1]["status"] == "suspicious");
    CHECK(all.body["customers"][0]["decision"] == "none");

    auto page = svc.list_customers(std::nullopt, "1", "2");
    CHECK(ids_of(page.body["customers"]) == std::vector<std::string>{"c2", "c3"});
    CHECK(page.body["total"] == 5);

    auto box = svc.list_customers("19.9,10.0005,20.1,10.0025", std::nullopt, std::nullopt);
    CHECK(ids_of(box.body["customers"]) == std::vector<std::string>{"c1", "c2"});
    auto empty = svc.list_customers("0,0,1,1", std::nullopt, std::nullopt);
    CHECK(empty.status == 200);
    CHECK(empty.body["customers"].empty());

    CHECK(svc.list_customers("20.1,10,19.9,11", std::nullopt, std::nullopt).status == 400);
    CHECK(svc.list_customers("1,2,3", std::nullopt, std::nullopt).status == 400);
    CHECK(svc.list_customers("a,b,c,d", std::nullopt, std::nullopt).status == 400);
    CHECK(svc.list_customers(std::nullopt, "-1", std::nullopt).status == 400);
    CHECK(svc.list_customers(std::nullopt, std::nullopt, "0").status == 400);
    CHECK(svc.list_customers(std::nullopt, std::nullopt, "10001").status == 400);
}

TEST_CASE("profile payload") {
    std::vector<ServedCustomer> cs{served("flat", 1, 1, 0.2)};
    cs[0].window = monthly_window("flat", ntl::testing::constant_series(24, 310.0));
    ReviewService svc(std::move(cs), {"GTS:a", "AVG:b"}, "GBT", {}, {}, fixed_clock);
    auto r = svc.profile("flat", std::nullopt);
    REQUIRE(r.status == 200);
    CHECK(r.body["schema"] == "ntl.profile.v1");
    CHECK(r.body["months"] == 12);
    const auto& c = r.body["consumption_kwh"];
    REQUIRE(c.size() == 12);
    for (const auto& v : c) CHECK(v == 310.0);
    CHECK(r.body["reading_dates"].size() == 12);
    CHECK(r.body["reading_dates"][11] == "2016-01-15");
    // December 15 to January 15 is 31 days.
    CHECK_THAT(r.body["daily_average_kwh"][11].get<double>(), WithinAbs(10.0, 1e-12));
    CHECK(r.body["status"] == "regular");
    CHECK(r.body["breakdown"]["model_kind"] == "GBT");
    CHECK_THAT(r.body["breakdown"]["distance_to_threshold"].get<double>(), WithinAbs(-0.3, 1e-12));
    CHECK(svc.profile("flat", "24").body["consumption_kwh"].size() == 24);
    CHECK(svc.profile("flat", "3").body["consumption_kwh"].size() == 3);
    CHECK(svc.profile("flat", "25").status == 400);
    CHECK(svc.profile("flat", "0").status == 400);
    CHECK(svc.profile("nobody", std::nullopt).status == 404);
}

TEST_CASE("profile breakdown ranks features by deviation") {
    const auto svc = small_service();
    const auto top = svc.profile("c1", std::nullopt).body["breakdown"]["top_features"];
    REQUIRE(top.size() == 2);
    CHECK(std::abs(top[0]["z_score"].get<double>()) >= std::abs(top[1]["z_score"].get<double>()));
    // The level feature is equal for everyone.
    CHECK(top[1]["feature"] == "AVG:b");
    CHECK(top[1]["z_score"] == 0.0);
}

TEST_CASE("neighbors by great-circle distance") {
    const auto svc = small_service();
    auto self = svc.neighbors("c2", "0.1");
    REQUIRE(self.status == 200);
    CHECK(ids_of(self.body["neighbors"]) == std::vector<std::string>{"c2"});
    CHECK(self.body["neighbors"][0]["distance_m"] == 0.0);
    CHECK(self.body["neighbors"][0]["sparkline_kwh"].size() == 12);

    auto near = svc.neighbors("c2", "150");
    auto near_ids = ids_of(near.body["neighbors"]);
    REQUIRE(near_ids.size() == 3);
    CHECK(near_ids[0] == "c2");
    std::sort(near_ids.begin() + 1, near_ids.end());
    CHECK(near_ids == std::vector<std::string>{"c2", "c1", "c5"});
    const auto& nb = near.body["neighbors"];
    CHECK(nb[1]["distance_m"].get<double>() <= nb[2]["distance_m"].get<double>());
    CHECK_THAT(near.body["neighbors"][1]["distance_m"].get<double>(), WithinAbs(111.195, 0.01));
    CHECK(svc.neighbors("c2", "100000").body["neighbors"].size() == 5);

    CHECK(svc.neighbors("c2", "0").status == 400);
    CHECK(svc.neighbors("c2", "-3").status == 400);
    CHECK(svc.neighbors("c2", std::nullopt).status == 400);
    CHECK(svc.neighbors("zz", "10").status == 404);
}

TEST_CASE("haversine distance") {
    CHECK(haversine_meters({0, 0}, {0, 0}) == 0.0);
    // A quarter meridian.
    CHECK_THAT(haversine_meters({0, 0}, {90, 0}), WithinAbs(6371008.8 * M_PI / 2, 1e-6));
    CHECK_THAT(haversine_meters({10, 20}, {-30, 40}), WithinAbs(haversine_meters({-30, 40}, {10, 20}), 1e-9));
}

TEST_CASE("decisions are read back and latest wins") {
    auto svc = small_service();
    auto r = svc.post_decision("c1", R"({"decision":"inspect","expert":"ana"})");
    REQUIRE(r.status == 200);
    CHECK(r.body["appended"] == true);
    CHECK(r.body["timestamp"] == "2020-01-01T00:00:00Z");
    CHECK(svc.profile("c1", std::nullopt).body["customer"]["decision"] == "inspect");
    svc.post_decision("c1", R"({"decision":"skip","expert":"ana"})");
    CHECK(svc.list_customers(std::nullopt, std::nullopt, "1").body["customers"][0]["decision"] == "skip");

    // An identical consecutive payload is not appended again.
    CHECK(svc.post_decision("c1", R"({"decision":"skip","expert":"ana"})").body["appended"] == false);
    CHECK(svc.decision_history().size() == 2);
    CHECK(svc.post_decision("c1", R"({"decision":"skip"})").body["expert"] == "anonymous");

    CHECK(svc.post_decision("c1", R"({"decision":"maybe"})").status == 400);
    CHECK(svc.post_decision("c1", "not json").status == 400);
    CHECK(svc.post_decision("c1", R"({"expert":"ana"})").status == 400);
    CHECK(svc.post_decision("c1", R"({"decision":"skip","expert":3})").status == 400);
    CHECK(svc.post_decision("c9", R"({"decision":"skip"})").status == 404);
}

TEST_CASE("inspection queue") {
    auto svc = small_service();
    auto q = svc.queue();
    CHECK(q.body["schema"] == "ntl.queue.v1");
    // Irregular only, by score, c4 before c5 on the tie.
    CHECK(ids_of(q.body["customers"]) == std::vector<std::string>{"c3", "c4", "c5"});
    svc.post_decision("c3", R"({"decision":"skip"})");
    svc.post_decision("c1", R"({"decision":"inspect"})");
    CHECK(ids_of(svc.queue().body["customers"]) == std::vector<std::string>{"c4", "c5", "c1"});
}

TEST_CASE("GET endpoints have no side effects") {
    auto svc = small_service();
    svc.post_decision("c2", R"({"decision":"inspect"})");
    const auto before = svc.list_customers(std::nullopt, std::nullopt, std::nullopt).body.dump() +
                        svc.profile("c2", "6").body.dump() + svc.neighbors("c2", "500").body.dump() +
                        svc.queue().body.dump();
    for (int i = 0; i < 3; ++i) {
        const auto again = svc.list_customers(std::nullopt, std::nullopt, std::nullopt).body.dump() +
                           svc.profile("c2", "6").body.dump() + svc.neighbors("c2", "500").body.dump() +
                           svc.queue().body.dump();
        CHECK(again == before);
    }
    CHECK(svc.decision_history().size() == 1);
}

TEST_CASE("decision log persists and replays") {
    TempDir dir;
    const auto path = dir / "decisions.jsonl";
    {
        auto svc = small_service(DecisionLog(path));
        svc.post_decision("c1", R"({"decision":"inspect","expert":"a"})");
        svc.post_decision("c2", R"({"decision":"skip","expert":"b"})");
        svc.post_decision("c1", R"({"decision":"skip","expert":"a"})");
        svc.post_decision("c1", R"({"decision":"skip","expert":"a"})");
    }
    DecisionLog log(path);
    REQUIRE(log.records().size() == 3);
    CHECK(log.current("c1") == Decision::Skip);
    CHECK(log.current("c2") == Decision::Skip);
    CHECK(log.current("c3") == Decision::None);
    const auto replayed = DecisionLog::replay(log.records());
    CHECK(replayed.at("c1") == Decision::Skip);
    CHECK(replayed.size() == 2);
    CHECK(log.records()[0].score == 0.10);

    // A restarted service sees the persisted decisions.
    auto svc = small_service(DecisionLog(path));
    CHECK(svc.profile("c1", std::nullopt).body["customer"]["decision"] == "skip");
    svc.post_decision("c3", R"({"decision":"inspect","expert":"a"})");
    CHECK(DecisionLog(path).records().size() == 4);

    std::ofstream(dir / "bad.jsonl") << to_json(log.records()[0]).dump() << "\n{oops\n";
    try {
        DecisionLog bad(dir / "bad.jsonl");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    std::ofstream(dir / "schema.jsonl") << R"({"customer_id":"c1"})" << "\n";
    CHECK_THROWS_AS(DecisionLog(dir / "schema.jsonl"), SchemaError);
}

TEST_CASE("replay reconstructs current decisions") {
    Rng rng(17);
    DecisionLog log;
    std::map<std::string, Decision> expected;
    for (int i = 0; i < 2000; ++i) {
        DecisionRecord r;
        r.customer_id = "c" + std::to_string(rng.uniform_int(0, 30));
        r.decision = rng.uniform() < 0.5 ? Decision::Inspect : Decision::Skip;
        r.expert = rng.uniform() < 0.5 ? "a" : "b";
        if (log.append(r)) expected[r.customer_id] = r.decision;
        CHECK(log.current(r.customer_id) == r.decision);
    }
    CHECK(DecisionLog::replay(log.records()) == expected);
}

TEST_CASE("duplicate customer ids are rejected") {
    std::vector<ServedCustomer> cs{served("a", 0, 0, 0.1), served("a", 1, 1, 0.2)};
    CHECK_THROWS_AS(ReviewService(std::move(cs), {"GTS:a", "AVG:b"}, "DT", {}, {}), InvalidInput);
}

TEST_CASE("synthetic town: list covers every customer") {
    const auto& t = town();
    const auto svc = ReviewService::build(t.model, t.data.customers, t.windows, {}, {}, fixed_clock);
    CHECK(svc.size() == 2000);
    auto r = svc.list_customers("-180,-90,180,90", std::nullopt, "10000");
    CHECK(r.body["total"] == 2000);
    CHECK(r.body["customers"].size() == 2000);
}

TEST_CASE("synthetic town: planted drop shows in the profile") {
    const auto& t = town();
    const auto svc = ReviewService::build(t.model, t.data.customers, t.windows, {}, {}, fixed_clock);
    std::size_t checked = 0;
    for (const auto& [id, a] : t.data.anomaly) {
        if (a != Anomaly::StepDrop) continue;
        const auto c = svc.profile(id, "24").body["consumption_kwh"].get<std::vector<double>>();
        REQUIRE(c.size() == 24);
        const double first_year = std::accumulate(c.begin(), c.begin() + 12, 0.0) / 12.0;
        CHECK((c[21] + c[22] + c[23]) / 3.0 < 0.6 * first_year);
        ++checked;
    }
    CHECK(checked > 50);
}

TEST_CASE("synthetic town: hot neighborhoods carry more irregular customers") {
    const auto& t = town();
    const auto svc = ReviewService::build(t.model, t.data.customers, t.windows, {}, {}, fixed_clock);
    const auto records = svc.records();
    double irregular = 0;
    for (const auto& r : records) irregular += r.status == Status::Irregular;
    const double global_rate = irregular / static_cast<double>(records.size());

    for (const auto& hood : t.data.hot_neighborhoods) {
        // Query around the member closest to the neighborhood centroid.
        double lat = 0, lon = 0, n = 0;
        for (const auto& c : t.data.customers)
            if (c.neighborhood_id == hood) lat += c.location.latitude, lon += c.location.longitude, n += 1;
        const GeoPoint centroid{lat / n, lon / n};
        const CustomerGeo* best = nullptr;
        for (const auto& c : t.data.customers)
            if (c.neighborhood_id == hood &&
                (!best || haversine_meters(c.location, centroid) < haversine_meters(best->location, centroid)))
                best = &c;
        const auto near = svc.neighbors(best->customer_id, "300").body["neighbors"];
        double hits = 0;
        for (const auto& c : near) hits += c["status"] == "irregular";
        INFO(hood << " " << near.size() << " neighbors");
        CHECK(hits / static_cast<double>(near.size()) > global_rate);
    }
}

TEST_CASE("HTTP round trip") {
    auto svc = small_service();
    TempDir dir;
    std::ofstream(dir / "index.html") << "<html>ui</html>";
    auto server = make_http_server(svc, dir.path());
    const int port = server->bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread worker([&] { server->listen_after_bind(); });
    server->wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    auto list = client.Get("/customers?bbox=19.9,9.9,20.1,10.1&limit=2");
    REQUIRE(list);
    CHECK(list->status == 200);
    CHECK(list->get_header_value("Content-Type").find("application/json") == 0);
    CHECK(nlohmann::json::parse(list->body)["customers"].size() == 2);

    CHECK(client.Get("/customers?bbox=1,2")->status == 400);
    CHECK(client.Get("/customers/c9/profile")->status == 404);
    CHECK(nlohmann::json::parse(client.Get("/customers/c9/profile")->body).contains("error"));
    CHECK(nlohmann::json::parse(client.Get("/customers/c1/profile?months=6")->body)["months"] == 6);
    CHECK(client.Get("/customers/c1/neighbors?radius=120")->status == 200);

    auto post = client.Post("/customers/c1/decision", R"({"decision":"inspect","expert":"e"})", "application/json");
    REQUIRE(post);
    CHECK(post->status == 200);
    CHECK(client.Post("/customers/c1/decision", R"({"decision":"maybe"})", "application/json")->status == 400);
    auto q = nlohmann::json::parse(client.Get("/inspections/queue")->body);
    CHECK(ids_of(q["customers"]).back() == "c1");

    auto ui = client.Get("/index.html");
    REQUIRE(ui);
    CHECK(ui->body == "<html>ui</html>");
    CHECK(client.Get("/nowhere")->status == 404);

    server->stop();
    worker.join();
}
