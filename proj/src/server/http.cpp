#include <httplib.h>

#include "gradproj/server.hpp"

namespace gradproj::server {
namespace {

void send(httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
}

}  // namespace

void mount(httplib::Server& srv, Api& api) {
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                             {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                             {"Access-Control-Allow-Headers", "Content-Type"}});
    srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    srv.Get("/runs", [&api](const httplib::Request&, httplib::Response& res) { send(res, api.list_runs()); });
    srv.Get(R"(/runs/([^/]+)/projection)", [&api](const httplib::Request& req, httplib::Response& res) {
        send(res, api.projection(req.matches[1]));
    });
    srv.Get(R"(/runs/([^/]+)/documents/([^/]+)/heatmap)", [&api](const httplib::Request& req, httplib::Response& res) {
        send(res, api.heatmap(req.matches[1], req.matches[2]));
    });
    srv.Get(R"(/runs/([^/]+)/cloud)", [&api](const httplib::Request& req, httplib::Response& res) {
        std::optional<std::string> scoring;
        if (req.has_param("scoring")) scoring = req.get_param_value("scoring");
        send(res, api.cloud(req.matches[1], scoring));
    });
    srv.Get(R"(/runs/([^/]+)/markers)", [&api](const httplib::Request& req, httplib::Response& res) {
        send(res, api.markers(req.matches[1]));
    });
    srv.Post("/runs", [&api](const httplib::Request& req, httplib::Response& res) { send(res, api.post_run(req.body)); });
    srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) res.set_content(R"({"error":"not found"})", "application/json");
    });
}

}  // namespace gradproj::server
