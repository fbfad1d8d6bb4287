#pragma once

// Run configuration and its JSON form. Every field has a default except the
// corpus and vector paths; unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "gradproj/attribution.hpp"
#include "gradproj/cloud.hpp"
#include "gradproj/corpus.hpp"
#include "gradproj/encoder.hpp"
#include "gradproj/projector.hpp"

namespace gradproj {

struct EncoderSettings {
    encoder::Kind kind = encoder::Kind::mean_pool;
    std::optional<std::size_t> h;  // default: vector dimension
    std::optional<std::filesystem::path> params_path;
};

struct CloudSettings {
    std::optional<std::filesystem::path> palette_path;
    std::size_t pseudo_label_k = 2;
    std::optional<double> subdivide_tau;
};

struct PipelineConfig {
    std::filesystem::path corpus_path;
    std::filesystem::path vectors_path;
    std::optional<std::filesystem::path> stopwords_path;
    EncoderSettings encoder;
    projector::ProjectorConfig projector;  // seed is overwritten by `seed`
    attribution::Source scoring = attribution::Source::gradient;
    attribution::Reduction reduction = attribution::Reduction::grad_times_input;
    std::size_t top_k = cloud::kDefaultTopK;
    CloudSettings cloud;
    corpus::OovPolicy oov_policy = corpus::OovPolicy::skip;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "runs";
    std::string run_name = "run";

    // Throws ConfigError for out-of-range values. Does not touch the disk.
    void validate() const;
};

// Relative paths are resolved against `base_dir` when it is non-empty.
PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::ordered_json config_to_json(const PipelineConfig& cfg);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace gradproj
