#pragma once

// Self-contained run output: everything the explorer needs to render a run
// without recomputation.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gradproj/cloud.hpp"

namespace gradproj {

inline constexpr int kSchemaVersion = 1;

struct ProjectedDoc {
    std::string id;
    double x = 0.0;
    double y = 0.0;
    std::string label;
    friend bool operator==(const ProjectedDoc&, const ProjectedDoc&) = default;
};

struct Trace {
    std::string kind;  // "stress" or "kl"
    std::vector<double> values;
    friend bool operator==(const Trace&, const Trace&) = default;
};

struct Timing {
    double forward_ms = 0.0;
    double forward_untracked_ms = 0.0;
    double backward_ms = 0.0;
    double overhead_ratio = 0.0;
    std::size_t backward_passes = 0;
    friend bool operator==(const Timing&, const Timing&) = default;
};

struct Artifact {
    int schema_version = kSchemaVersion;
    nlohmann::ordered_json config;
    std::vector<ProjectedDoc> projection;
    std::vector<cloud::HeatmapPayload> heatmaps;  // projection order
    std::vector<cloud::Marker> markers;
    std::string scoring;                                        // key of the primary cloud
    std::map<std::string, std::vector<cloud::CloudEntry>> clouds;  // "gradient", "attention"
    cloud::Palette palette;
    Trace trace;
    Timing timing;

    const std::vector<cloud::CloudEntry>& cloud() const;
    const cloud::HeatmapPayload* heatmap(const std::string& doc_id) const;

    friend bool operator==(const Artifact&, const Artifact&) = default;
};

nlohmann::ordered_json to_json(const Artifact& a);
Artifact artifact_from_json(const nlohmann::ordered_json& j);

// JSON with the timing block removed; equal for reruns of the same config.
std::string content_json(const Artifact& a);

void export_json(const Artifact& a, const std::filesystem::path& path);
Artifact load_artifact(const std::filesystem::path& path);

// Static scatter plot: one circle per document colored by label, one text
// element per cloud entry at its centroid, font size mapped affinely from the
// smallest entry (10pt) to the largest (36pt).
std::string render_svg(const Artifact& a, const std::optional<std::string>& scoring = std::nullopt);
void export_svg(const Artifact& a, const std::filesystem::path& path,
                const std::optional<std::string>& scoring = std::nullopt);

struct SizeDelta {
    std::string word;
    double size_a = 0.0;
    double size_b = 0.0;
    double delta = 0.0;  // size_b - size_a
};

struct Comparison {
    std::string scoring_a;
    std::string scoring_b;
    bool sources_match = false;
    double jaccard = 1.0;
    std::vector<std::string> only_a;
    std::vector<std::string> only_b;
    std::vector<SizeDelta> deltas;  // shared words, ordered by word
};

// Compares the clouds of two runs over the same documents. `scoring` selects
// which stored cloud to use from each run (default: each run's primary one).
Comparison compare(const Artifact& a, const Artifact& b, const std::optional<std::string>& scoring = std::nullopt);
nlohmann::ordered_json to_json(const Comparison& c);

}  // namespace gradproj
