#include "gradproj/server.hpp"

#include <algorithm>

#include "gradproj/errors.hpp"
#include "gradproj/pipeline.hpp"

namespace gradproj::server {
namespace {

using nlohmann::ordered_json;

Response json_response(int status, const ordered_json& j) { return {status, j.dump()}; }

Response error(int status, const std::string& message) { return json_response(status, {{"error", message}}); }

Response unknown_run(const std::string& id) { return error(404, "unknown run '" + id + "'"); }

}  // namespace

ArtifactStore::ArtifactStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::vector<std::string> ArtifactStore::load() {
    std::vector<std::string> problems;
    std::error_code ec;
    if (!std::filesystem::is_directory(dir_, ec)) {
        problems.push_back("not a directory: " + dir_.string());
        return problems;
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::unique_lock lock(mutex_);
    for (const auto& f : files) {
        try {
            Artifact a = load_artifact(f);
            auto run = std::make_shared<StoredRun>(StoredRun{a, to_json(a)});
            runs_[f.stem().string()] = std::move(run);
        } catch (const std::exception& e) {
            problems.push_back(f.string() + ": " + e.what());
        }
    }
    return problems;
}

std::shared_ptr<const StoredRun> ArtifactStore::find(const std::string& run_id) const {
    std::shared_lock lock(mutex_);
    const auto it = runs_.find(run_id);
    return it == runs_.end() ? nullptr : it->second;
}

std::vector<std::string> ArtifactStore::ids() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, run] : runs_) out.push_back(id);
    return out;
}

std::string ArtifactStore::add(const std::string& name, Artifact artifact) {
    auto run = std::make_shared<StoredRun>(StoredRun{std::move(artifact), {}});
    run->json = to_json(run->artifact);
    std::unique_lock lock(mutex_);
    std::string id = name;
    for (int i = 2; runs_.contains(id) || std::filesystem::exists(dir_ / (id + ".json")); ++i) {
        id = name + "-" + std::to_string(i);
    }
    export_json(run->artifact, dir_ / (id + ".json"));
    runs_[id] = std::move(run);
    return id;
}

Response Api::list_runs() const {
    ordered_json arr = ordered_json::array();
    for (const std::string& id : store_.ids()) {
        const auto run = store_.find(id);
        if (!run) continue;
        ordered_json scorings = ordered_json::array();
        for (const auto& [k, v] : run->artifact.clouds) scorings.push_back(k);
        arr.push_back({{"run_id", id},
                       {"documents", run->artifact.projection.size()},
                       {"scoring", run->artifact.scoring},
                       {"scorings", std::move(scorings)},
                       {"projector", run->json["config"].value("/projector/kind"_json_pointer, "")},
                       {"encoder", run->json["config"].value("/encoder/kind"_json_pointer, "")}});
    }
    return json_response(200, {{"runs", std::move(arr)}});
}

Response Api::projection(const std::string& run_id) const {
    const auto run = store_.find(run_id);
    if (!run) return unknown_run(run_id);
    return json_response(200, {{"run_id", run_id}, {"projection", run->json["projection"]}, {"palette", run->json["palette"]}});
}

Response Api::heatmap(const std::string& run_id, const std::string& doc_id) const {
    const auto run = store_.find(run_id);
    if (!run) return unknown_run(run_id);
    const auto& heat = run->json["heatmaps"];
    const auto it = heat.find(doc_id);
    if (it == heat.end()) return error(404, "unknown document '" + doc_id + "' in run '" + run_id + "'");
    return json_response(200, {{"run_id", run_id}, {"doc_id", doc_id}, {"entries", *it}});
}

Response Api::cloud(const std::string& run_id, const std::optional<std::string>& scoring) const {
    const auto run = store_.find(run_id);
    if (!run) return unknown_run(run_id);
    const std::string key = scoring.value_or(run->artifact.scoring);
    const auto& clouds = run->json["clouds"];
    const auto it = clouds.find(key);
    if (it == clouds.end()) return error(400, "run '" + run_id + "' has no '" + key + "' cloud");
    return json_response(200, {{"run_id", run_id}, {"scoring", key}, {"entries", *it}});
}

Response Api::markers(const std::string& run_id) const {
    const auto run = store_.find(run_id);
    if (!run) return unknown_run(run_id);
    return json_response(200, {{"run_id", run_id}, {"markers", run->json["markers"]}});
}

Response Api::post_run(const std::string& body) {
    PipelineConfig cfg;
    try {
        cfg = config_from_json(nlohmann::json::parse(body));
    } catch (const nlohmann::json::exception& e) {
        return error(422, std::string("config is not valid JSON: ") + e.what());
    } catch (const ConfigError& e) {
        return error(422, e.what());
    }
    std::lock_guard lock(run_mutex_);
    try {
        Artifact a = run_pipeline(cfg);
        const std::string id = store_.add(cfg.run_name, std::move(a));
        return json_response(201, {{"run_id", id}});
    } catch (const ConfigError& e) {
        return error(422, e.what());
    } catch (const DataError& e) {
        return error(422, e.what());
    } catch (const NumericError& e) {
        return error(500, e.what());
    } catch (const std::exception& e) {
        return error(500, e.what());
    }
}

}  // namespace gradproj::server
