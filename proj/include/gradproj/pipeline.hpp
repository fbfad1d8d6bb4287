#pragma once

// End-to-end run: corpus -> tokens -> encode -> project -> attribute -> cloud.

#include <span>
#include <vector>

#include "gradproj/artifact.hpp"
#include "gradproj/config.hpp"

namespace gradproj {

struct Inputs {
    std::vector<corpus::Document> documents;
    corpus::WordVectorTable vectors;
    corpus::StopwordSet stopwords;
};

// Reads the files named by the config. Missing files are ConfigErrors,
// malformed contents DataErrors.
Inputs load_inputs(const PipelineConfig& cfg);

// Encoder configuration for vectors of dimension e, seeded from cfg.seed.
encoder::EncoderConfig make_encoder(const PipelineConfig& cfg, std::size_t e);

// The differentiable part of a run on one graph: per-document word leaves are
// encoded, stacked into an n x h matrix and projected.
struct Forward {
    std::vector<encoder::EncodeResult> encodings;
    ad::Value embeddings;
    projector::Projection projection;
};

Forward encode_and_project(std::span<const ad::Value> words, const encoder::EncoderConfig& enc,
                           const projector::ProjectorConfig& proj);

Artifact run_pipeline(const PipelineConfig& cfg);
Artifact run_pipeline(const PipelineConfig& cfg, const Inputs& inputs);

}  // namespace gradproj
