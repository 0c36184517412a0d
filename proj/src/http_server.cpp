#include "ntl/http_server.hpp"

#include <httplib.h>

namespace ntl {

namespace {

std::optional<std::string> param(const httplib::Request& req, const char* key) {
    if (!req.has_param(key)) return std::nullopt;
    return req.get_param_value(key);
}

void send(httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
}

} // namespace

std::unique_ptr<httplib::Server> make_http_server(ReviewService& service,
                                                  const std::optional<std::filesystem::path>& static_dir) {
    auto server = std::make_unique<httplib::Server>();
    auto& s = *server;

    s.Get("/customers", [&service](const httplib::Request& req, httplib::Response& res) {
        send(res, service.list_customers(param(req, "bbox"), param(req, "offset"), param(req, "limit")));
    });
    s.Get(R"(/customers/([^/]+)/profile)", [&service](const httplib::Request& req, httplib::Response& res) {
        send(res, service.profile(req.matches[1], param(req, "months")));
    });
    s.Get(R"(/customers/([^/]+)/neighbors)", [&service](const httplib::Request& req, httplib::Response& res) {
        send(res, service.neighbors(req.matches[1], param(req, "radius")));
    });
    s.Post(R"(/customers/([^/]+)/decision)", [&service](const httplib::Request& req, httplib::Response& res) {
        send(res, service.post_decision(req.matches[1], req.body));
    });
    s.Get("/inspections/queue",
          [&service](const httplib::Request&, httplib::Response& res) { send(res, service.queue()); });

    if (static_dir) {
        if (!s.set_mount_point("/", static_dir->string()))
            throw InvalidInput("static directory " + static_dir->string() + " does not exist");
    } else {
        s.Get("/", [](const httplib::Request&, httplib::Response& res) {
            const nlohmann::json index{{"endpoints",
                                        {"GET /customers?bbox=minLon,minLat,maxLon,maxLat&offset=&limit=",
                                         "GET /customers/{id}/profile?months=",
                                         "GET /customers/{id}/neighbors?radius=",
                                         "POST /customers/{id}/decision",
                                         "GET /inspections/queue"}}};
            res.set_content(index.dump(), "application/json");
        });
    }

    s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        res.status = 500;
        res.set_content(nlohmann::json{{"error", what}}.dump(), "application/json");
    });
    s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (!res.body.empty()) return;
        res.set_content(nlohmann::json{{"error", httplib::status_message(res.status)}}.dump(), "application/json");
    });
    return server;
}

} // namespace ntl
