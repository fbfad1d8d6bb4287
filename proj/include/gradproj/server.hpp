#pragma once

// HTTP API over stored run artifacts. Handlers are plain functions of the
// request parts so they can be tested without a socket; `mount` wires them to
// an httplib server.

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "gradproj/artifact.hpp"

namespace httplib {
class Server;
}

namespace gradproj::server {

struct Response {
    int status = 200;
    std::string body;  // JSON
};

struct StoredRun {
    Artifact artifact;
    nlohmann::ordered_json json;  // to_json(artifact), built once
};

// run_id -> artifact. Entries are never modified after insertion.
class ArtifactStore {
public:
    explicit ArtifactStore(std::filesystem::path dir);

    // Loads every *.json artifact in the directory; the file stem is the run
    // id. Files that fail to parse are skipped and their errors returned.
    std::vector<std::string> load();

    std::shared_ptr<const StoredRun> find(const std::string& run_id) const;
    std::vector<std::string> ids() const;

    // Stores under `name`, or `name-2`, `name-3`, ... if taken, writes
    // <dir>/<id>.json and returns the id.
    std::string add(const std::string& name, Artifact artifact);

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::shared_ptr<const StoredRun>> runs_;
};

class Api {
public:
    explicit Api(ArtifactStore& store) : store_(store) {}

    Response list_runs() const;
    Response projection(const std::string& run_id) const;
    Response heatmap(const std::string& run_id, const std::string& doc_id) const;
    Response cloud(const std::string& run_id, const std::optional<std::string>& scoring) const;
    Response markers(const std::string& run_id) const;
    // Body is a pipeline config; relative paths resolve against the server's
    // working directory.
    Response post_run(const std::string& body);

private:
    ArtifactStore& store_;
    std::mutex run_mutex_;
};

// Registers the routes, CORS headers and OPTIONS preflight on `srv`.
void mount(httplib::Server& srv, Api& api);

}  // namespace gradproj::server
