#pragma once

// Spatial word clouds: per-document top-k words grouped by surface form and
// placed at the count-weighted centroid of the documents they come from. Also
// the heatmap and marker payloads derived from the same scores.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gradproj/attribution.hpp"
#include "gradproj/matrix.hpp"

namespace gradproj::cloud {

struct Point {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point&, const Point&) = default;
};

inline constexpr std::size_t kDefaultTopK = 20;
inline constexpr const char* kMixedKey = "mixed";
inline constexpr const char* kPurple = "#800080";

// Ranked by score descending, ties by position ascending; min(k, d) entries.
std::vector<attribution::WordScore> top_k_words(std::span<const attribution::WordScore> doc_scores, std::size_t k);

struct DocTopK {
    std::string doc_id;
    Point position;
    std::vector<attribution::WordScore> top;
};

struct Member {
    std::string doc_id;
    std::size_t count = 0;  // instances of the word among the doc's top-k
    Point position;
    double score = 0.0;     // sum of those instances' scores
};

struct WordGroup {
    std::string word;
    std::vector<Member> members;  // in document input order
    double total_score = 0.0;
};

// One group per distinct word, ordered by word.
std::vector<WordGroup> group_by_word(std::span<const DocTopK> docs);

Point weighted_centroid(const WordGroup& group);

// Splits each group into single-linkage components of its members, joining
// members whose positions are at most `tau` apart. Components keep the word.
std::vector<WordGroup> subdivide(std::span<const WordGroup> groups, double tau);

using Palette = std::map<std::string, std::string>;

// JSON object label -> "#rrggbb". "mixed" defaults to purple.
Palette load_palette(const std::filesystem::path& path);
Palette parse_palette(std::string_view json_text);
// Assigns a fixed color cycle to `labels` in sorted order, plus "mixed".
Palette default_palette(std::span<const std::string> labels);

struct CloudEntry {
    std::string word;
    Point centroid;
    double size = 0.0;
    std::string color;
    std::vector<std::string> members;

    friend bool operator==(const CloudEntry&, const CloudEntry&) = default;
};

// Drops groups whose total count is 1, keeps only the highest-scoring word
// among groups with the same (doc, count) member multiset (ties to the
// lexicographically smaller word), and colors each entry by its members'
// common label or the palette's "mixed" color. Ordered by size descending,
// then word.
std::vector<CloudEntry> build_cloud(std::span<const WordGroup> groups, const std::map<std::string, std::string>& labels,
                                    const Palette& palette);

// Seeded k-means++ followed by at most 100 Lloyd iterations on the rows of an
// n x 2 matrix. Cluster ids are renumbered by first appearance.
std::vector<std::size_t> pseudo_labels(const Matrix& coords, std::size_t k, std::uint64_t seed);

struct HeatmapEntry {
    std::string word;
    std::size_t position = 0;
    double magnitude = 0.0;
    double intensity = 0.0;
    friend bool operator==(const HeatmapEntry&, const HeatmapEntry&) = default;
};

struct HeatmapPayload {
    std::string doc_id;
    std::vector<HeatmapEntry> entries;
    friend bool operator==(const HeatmapPayload&, const HeatmapPayload&) = default;
};

HeatmapPayload heatmap_payload(const attribution::TangentMap& tmap, const corpus::TokenSequence& seq);

struct Marker {
    std::string doc_id;
    Point position;
    std::string word;
    double magnitude = 0.0;
    friend bool operator==(const Marker&, const Marker&) = default;
};

// coords row i belongs to tmaps[i] / seqs[i].
std::vector<Marker> marker_payload(std::span<const attribution::TangentMap> tmaps,
                                   std::span<const corpus::TokenSequence> seqs, const Matrix& coords);

}  // namespace gradproj::cloud
