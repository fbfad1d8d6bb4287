#pragma once

#include <atomic>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "gradproj/config.hpp"
#include "gradproj/synth.hpp"

namespace testsupport {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("gradproj-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// Writes a synthetic two-topic corpus into `dir` and returns a config that
// points at it.
inline gradproj::PipelineConfig synth_config(const std::filesystem::path& dir, std::size_t docs,
                                             std::uint64_t seed = 0) {
    gradproj::synth::SynthOptions opts;
    opts.documents = docs;
    opts.seed = seed;
    gradproj::synth::write_files(gradproj::synth::two_topic_corpus(opts), dir);
    gradproj::PipelineConfig cfg;
    cfg.corpus_path = dir / "corpus.jsonl";
    cfg.vectors_path = dir / "vectors.txt";
    cfg.cloud.palette_path = dir / "palette.json";
    cfg.output_dir = dir / "runs";
    cfg.seed = seed;
    return cfg;
}

}  // namespace testsupport
