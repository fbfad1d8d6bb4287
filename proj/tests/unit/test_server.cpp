#include <doctest.h>
#include <httplib.h>

#include <fstream>
#include <set>
#include <thread>

#include "gradproj/pipeline.hpp"
#include "gradproj/server.hpp"
#include "support/fixtures.hpp"

using namespace gradproj;
using namespace gradproj::server;
using nlohmann::json;
using testsupport::TempDir;

namespace {

json body(const Response& r) { return json::parse(r.body); }

// Artifacts dir holding one mean_pool run ("mp") and one tiny_attention run
// ("att"), plus the config used for them.
struct Fixture {
    TempDir data{"srv-data"};
    TempDir store_dir{"srv-store"};
    PipelineConfig cfg;
    Artifact mp, att;

    Fixture() {
        cfg = testsupport::synth_config(data.path(), 8);
        mp = run_pipeline(cfg);
        export_json(mp, store_dir.path() / "mp.json");
        PipelineConfig c2 = cfg;
        c2.encoder.kind = encoder::Kind::tiny_attention;
        att = run_pipeline(c2);
        export_json(att, store_dir.path() / "att.json");
        std::ofstream(store_dir.path() / "broken.json") << "{not json";
    }

    std::string config_body(const std::string& run_name) const {
        auto j = config_to_json(cfg);
        j["run_name"] = run_name;
        return j.dump();
    }
};

}  // namespace

TEST_CASE("store loading") {
    Fixture f;
    ArtifactStore store(f.store_dir.path());
    const auto problems = store.load();
    REQUIRE(problems.size() == 1);
    CHECK(problems[0].find("broken.json") != std::string::npos);
    CHECK(store.ids() == std::vector<std::string>{"att", "mp"});
    REQUIRE(store.find("mp"));
    CHECK(store.find("mp")->artifact == f.mp);
    CHECK(store.find("zzz") == nullptr);
}

TEST_CASE("read endpoints") {
    Fixture f;
    ArtifactStore store(f.store_dir.path());
    store.load();
    Api api(store);

    const json runs = body(api.list_runs());
    REQUIRE(runs["runs"].size() == 2);
    CHECK(runs["runs"][0]["run_id"] == "att");
    CHECK(runs["runs"][0]["scorings"].size() == 2);

    SUBCASE("projection") {
        const Response r = api.projection("mp");
        CHECK(r.status == 200);
        const json j = body(r);
        REQUIRE(j["projection"].size() == f.mp.projection.size());
        for (std::size_t i = 0; i < f.mp.projection.size(); ++i) {
            CHECK(j["projection"][i]["id"] == f.mp.projection[i].id);
            CHECK(j["projection"][i]["x"].get<double>() == f.mp.projection[i].x);
            CHECK(j["projection"][i]["label"] == f.mp.projection[i].label);
        }
        CHECK(api.projection("nope").status == 404);
    }
    SUBCASE("heatmap") {
        const std::string doc = f.mp.projection[3].id;
        const Response r = api.heatmap("mp", doc);
        CHECK(r.status == 200);
        const json entries = body(r)["entries"];
        REQUIRE(entries.size() == f.mp.heatmap(doc)->entries.size());
        std::size_t last = 0;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const auto pos = entries[i]["position"].get<std::size_t>();
            if (i > 0) CHECK(pos > last);
            last = pos;
            CHECK(entries[i]["intensity"].get<double>() >= 0.0);
            CHECK(entries[i]["intensity"].get<double>() <= 1.0);
        }
        CHECK(api.heatmap("mp", "absent").status == 404);
        CHECK(api.heatmap("nope", doc).status == 404);
    }
    SUBCASE("cloud") {
        const Response r = api.cloud("mp", std::string("gradient"));
        CHECK(r.status == 200);
        CHECK(body(r)["entries"] == json::parse(to_json(f.mp)["cloud"].dump()));
        CHECK(api.cloud("mp", std::nullopt).body == r.body);
        CHECK(api.cloud("mp", std::string("attention")).status == 400);
        CHECK(api.cloud("mp", std::string("bogus")).status == 400);
        CHECK(api.cloud("nope", std::string("gradient")).status == 404);

        const Response ra = api.cloud("att", std::string("attention"));
        CHECK(ra.status == 200);
        std::set<std::string> colors{cloud::kPurple};
        for (const auto& [k, v] : f.att.palette) colors.insert(v);
        const json entries = body(ra)["entries"];
        for (const auto& e : entries) CHECK(colors.count(e["color"].get<std::string>()) == 1);
    }
    SUBCASE("markers") {
        const json j = body(api.markers("mp"));
        CHECK(j["markers"].size() == f.mp.projection.size());
        CHECK(api.markers("nope").status == 404);
    }
    SUBCASE("reads are byte-identical") {
        for (int i = 0; i < 3; ++i) {
            CHECK(api.projection("att").body == api.projection("att").body);
            CHECK(api.cloud("att", std::string("attention")).body == api.cloud("att", std::string("attention")).body);
            CHECK(api.list_runs().body == api.list_runs().body);
        }
    }
}

TEST_CASE("post_run") {
    Fixture f;
    ArtifactStore store(f.store_dir.path());
    store.load();
    Api api(store);

    const Response r1 = api.post_run(f.config_body("fresh"));
    REQUIRE(r1.status == 201);
    const std::string id1 = body(r1)["run_id"];
    CHECK(id1 == "fresh");
    CHECK(api.projection(id1).status == 200);
    CHECK(std::filesystem::exists(f.store_dir.path() / "fresh.json"));

    const Response r2 = api.post_run(f.config_body("fresh"));
    REQUIRE(r2.status == 201);
    CHECK(body(r2)["run_id"] != id1);
    const Response r3 = api.post_run(f.config_body("mp"));
    CHECK(body(r3)["run_id"] != "mp");
    // Existing artifacts are untouched.
    CHECK(store.find("mp")->artifact == f.mp);

    std::string ida, idb;
    std::thread ta([&] { ida = body(api.post_run(f.config_body("race")))["run_id"]; });
    std::thread tb([&] { idb = body(api.post_run(f.config_body("race")))["run_id"]; });
    ta.join();
    tb.join();
    CHECK(ida != idb);
    CHECK(store.find(ida));
    CHECK(store.find(idb));

    auto bad_path = config_to_json(f.cfg);
    bad_path["corpus_path"] = (f.data.path() / "missing.jsonl").string();
    CHECK(api.post_run(bad_path.dump()).status == 422);
    CHECK(api.post_run("{").status == 422);
    CHECK(api.post_run(R"({"corpus_path": "c"})").status == 422);

    // Overflowing vectors fail in the numeric stage.
    std::ifstream in(f.cfg.vectors_path);
    std::string first, rest, line;
    std::getline(in, first);
    while (std::getline(in, line)) rest += line + "\n";
    std::ofstream(f.data.path() / "huge.txt") << first.substr(0, first.find(' ')) << " 1e200"
                                              << first.substr(first.find(' ', first.find(' ') + 1)) << "\n"
                                              << rest;
    auto huge = config_to_json(f.cfg);
    huge["vectors_path"] = (f.data.path() / "huge.txt").string();
    const Response r5 = api.post_run(huge.dump());
    CHECK(r5.status == 500);
    CHECK(body(r5)["error"].get<std::string>().find("stage 'forward'") != std::string::npos);
}

TEST_CASE("HTTP round trip") {
    Fixture f;
    ArtifactStore store(f.store_dir.path());
    store.load();
    Api api(store);
    httplib::Server srv;
    mount(srv, api);
    const int port = srv.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread t([&] { srv.listen_after_bind(); });
    srv.wait_until_ready();

    httplib::Client cli("127.0.0.1", port);
    auto res = cli.Get("/runs");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");
    CHECK(res->get_header_value("Content-Type") == "application/json");

    res = cli.Get("/runs/mp/projection");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->body == api.projection("mp").body);

    const std::string doc = f.mp.projection[0].id;
    res = cli.Get("/runs/mp/documents/" + doc + "/heatmap");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->body == api.heatmap("mp", doc).body);

    res = cli.Get("/runs/att/cloud?scoring=attention");
    REQUIRE(res);
    CHECK(res->status == 200);
    res = cli.Get("/runs/mp/cloud?scoring=attention");
    REQUIRE(res);
    CHECK(res->status == 400);
    res = cli.Get("/runs/mp/markers");
    REQUIRE(res);
    CHECK(res->status == 200);
    res = cli.Get("/runs/unknown/projection");
    REQUIRE(res);
    CHECK(res->status == 404);
    res = cli.Get("/nowhere");
    REQUIRE(res);
    CHECK(res->status == 404);

    res = cli.Options("/runs");
    REQUIRE(res);
    CHECK(res->status == 204);
    CHECK(res->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);

    res = cli.Post("/runs", f.config_body("posted"), "application/json");
    REQUIRE(res);
    CHECK(res->status == 201);
    const std::string id = json::parse(res->body)["run_id"];
    res = cli.Get("/runs/" + id + "/projection");
    REQUIRE(res);
    CHECK(res->status == 200);

    res = cli.Post("/runs", R"({"corpus_path": "/missing", "vectors_path": "/missing"})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 422);

    // Concurrent readers alongside a writer.
    std::vector<std::thread> readers;
    std::atomic<int> ok{0};
    for (int i = 0; i < 4; ++i) {
        readers.emplace_back([&] {
            httplib::Client c("127.0.0.1", port);
            for (int k = 0; k < 10; ++k) {
                auto r = c.Get("/runs/mp/cloud?scoring=gradient");
                if (r && r->status == 200) ++ok;
            }
        });
    }
    httplib::Client writer("127.0.0.1", port);
    auto w1 = writer.Post("/runs", f.config_body("dup"), "application/json");
    auto w2 = writer.Post("/runs", f.config_body("dup"), "application/json");
    for (auto& r : readers) r.join();
    CHECK(ok == 40);
    REQUIRE(w1);
    REQUIRE(w2);
    CHECK(json::parse(w1->body)["run_id"] != json::parse(w2->body)["run_id"]);

    srv.stop();
    t.join();
}
