#pragma once

// Seeded two-topic demo corpus: "sport" and "tech" documents whose topic words
// have orthogonal dominant vector components, padded with low-norm filler.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gradproj/corpus.hpp"

namespace gradproj::synth {

struct SyntheticCorpus {
    std::vector<corpus::Document> documents;
    corpus::WordVectorTable vectors;
    std::vector<std::string> sport_words;
    std::vector<std::string> tech_words;
    std::vector<std::string> filler_words;

    bool is_topic_word(const std::string& w) const;
};

struct SynthOptions {
    std::size_t documents = 20;
    std::size_t dimension = 8;  // >= 2
    std::size_t topic_words_per_doc = 3;
    std::size_t filler_words_per_doc = 3;
    std::uint64_t seed = 0;
};

SyntheticCorpus two_topic_corpus(const SynthOptions& opts);

// Writes corpus.jsonl, vectors.txt and palette.json into `dir`.
void write_files(const SyntheticCorpus& c, const std::filesystem::path& dir);

}  // namespace gradproj::synth
