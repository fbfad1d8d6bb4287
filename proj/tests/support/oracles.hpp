#pragma once

// Independent reference computations shared by unit and acceptance tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "gradproj/cloud.hpp"
#include "gradproj/pipeline.hpp"
#include "gradproj/rng.hpp"

namespace testsupport {

using gradproj::Matrix;

// Coordinates of a full rerun on a fresh, non-recording graph.
inline Matrix rerun_coords(const std::vector<Matrix>& inputs, const gradproj::encoder::EncoderConfig& enc,
                           const gradproj::projector::ProjectorConfig& proj) {
    gradproj::ad::Graph g(gradproj::ad::Recording::disabled);
    std::vector<gradproj::ad::Value> leaves;
    for (const Matrix& x : inputs) leaves.push_back(g.leaf(x.data, gradproj::ad::Shape::matrix(x.rows, x.cols)));
    return gradproj::projector::to_matrix(gradproj::encode_and_project(leaves, enc, proj).projection.coords);
}

// Central difference of point `doc` along word row `j` scaled by (1 +- h),
// i.e. the directional derivative along that word's own input vector.
inline std::array<double, 2> directional_fd(const std::vector<Matrix>& inputs, std::size_t doc, std::size_t j,
                                            const gradproj::encoder::EncoderConfig& enc,
                                            const gradproj::projector::ProjectorConfig& proj, double h) {
    auto scaled = [&](double f) {
        std::vector<Matrix> in = inputs;
        for (double& v : in[doc].row(j)) v *= f;
        return rerun_coords(in, enc, proj);
    };
    const Matrix plus = scaled(1.0 + h), minus = scaled(1.0 - h);
    return {(plus(doc, 0) - minus(doc, 0)) / (2.0 * h), (plus(doc, 1) - minus(doc, 1)) / (2.0 * h)};
}

inline double vec_rel_error(const std::array<double, 2>& g, const std::array<double, 2>& fd) {
    return std::hypot(g[0] - fd[0], g[1] - fd[1]) / (std::hypot(fd[0], fd[1]) + 1e-8);
}

inline std::vector<Matrix> random_inputs(gradproj::Rng& rng, std::size_t docs, std::size_t max_words, std::size_t e) {
    std::vector<Matrix> out;
    for (std::size_t i = 0; i < docs; ++i) {
        Matrix x(1 + rng.below(max_words), e);
        for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
        out.push_back(std::move(x));
    }
    return out;
}

// Straightforward spatial word cloud: nested loops over documents and words, no
// shared code with the library beyond the input types.
struct OracleEntry {
    std::string word;
    double x = 0.0, y = 0.0, size = 0.0;
    std::string color;
};

struct OracleDoc {
    std::string id;
    double x = 0.0, y = 0.0;
    std::string label;
    std::vector<gradproj::attribution::WordScore> scores;
};

inline std::vector<OracleEntry> brute_force_cloud(const std::vector<OracleDoc>& docs, std::size_t k,
                                                  const std::map<std::string, std::string>& palette) {
    // Step 1: top-k instances per document by repeated selection of the best
    // remaining instance (highest score, then lowest position).
    std::vector<std::vector<gradproj::attribution::WordScore>> tops;
    for (const OracleDoc& d : docs) {
        std::vector<gradproj::attribution::WordScore> pool = d.scores, top;
        while (!pool.empty() && top.size() < k) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < pool.size(); ++i) {
                if (pool[i].score > pool[best].score ||
                    (pool[i].score == pool[best].score && pool[i].position < pool[best].position)) {
                    best = i;
                }
            }
            top.push_back(pool[best]);
            pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(best));
        }
        tops.push_back(top);
    }
    // Step 2: per distinct word, per-document counts and scores.
    std::set<std::string> words;
    for (const auto& t : tops)
        for (const auto& s : t) words.insert(s.word);
    struct Candidate {
        std::string word;
        std::vector<std::pair<std::string, std::size_t>> members;
        double x, y, size;
        std::string color;
    };
    std::vector<Candidate> candidates;
    for (const std::string& w : words) {
        Candidate c{w, {}, 0, 0, 0, ""};
        double wx = 0, wy = 0, wsum = 0;
        std::set<std::string> labels;
        for (std::size_t i = 0; i < docs.size(); ++i) {
            std::size_t count = 0;
            for (const auto& s : tops[i]) {
                if (s.word != w) continue;
                ++count;
                c.size += s.score;
            }
            if (count == 0) continue;
            c.members.emplace_back(docs[i].id, count);
            wx += static_cast<double>(count) * docs[i].x;
            wy += static_cast<double>(count) * docs[i].y;
            wsum += static_cast<double>(count);
            labels.insert(docs[i].label);
        }
        if (wsum == 1.0) continue;  // single instance overall
        c.x = wx / wsum;
        c.y = wy / wsum;
        c.color = labels.size() == 1 ? palette.at(*labels.begin()) : palette.at("mixed");
        std::sort(c.members.begin(), c.members.end());
        candidates.push_back(c);
    }
    // Step 3: among identical member multisets keep the best word.
    std::vector<OracleEntry> out;
    for (const Candidate& c : candidates) {
        bool beaten = false;
        for (const Candidate& o : candidates) {
            if (&o == &c || o.members != c.members) continue;
            if (o.size > c.size || (o.size == c.size && o.word < c.word)) beaten = true;
        }
        if (!beaten) out.push_back({c.word, c.x, c.y, c.size, c.color});
    }
    return out;
}

// Random scored corpus of up to 10 documents over a small shared vocabulary
// (so words repeat within and across documents), with ties in scores.
inline std::vector<OracleDoc> random_scored_docs(gradproj::Rng& rng, std::size_t max_docs = 10) {
    static const char* vocab[] = {"alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"};
    static const char* label_set[] = {"red", "green", "blue"};
    std::vector<OracleDoc> docs;
    const std::size_t n = 1 + rng.below(max_docs);
    for (std::size_t i = 0; i < n; ++i) {
        OracleDoc d{"d" + std::to_string(i), rng.uniform(-5, 5), rng.uniform(-5, 5), label_set[rng.below(3)], {}};
        const std::size_t words = 1 + rng.below(12);
        for (std::size_t p = 0; p < words; ++p) {
            // Quantised scores produce ties on purpose.
            const double score = static_cast<double>(rng.below(6)) * 0.5;
            d.scores.push_back({d.id, p, vocab[rng.below(std::size(vocab))], score,
                                gradproj::attribution::Source::gradient});
        }
        docs.push_back(std::move(d));
    }
    return docs;
}

// Mean silhouette of a labelled 2D point set.
inline double silhouette(const Matrix& coords, const std::vector<std::string>& labels) {
    const std::size_t n = coords.rows;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::map<std::string, std::pair<double, std::size_t>> by_label;
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double d = std::hypot(coords(i, 0) - coords(j, 0), coords(i, 1) - coords(j, 1));
            auto& slot = by_label[labels[j]];
            slot.first += d;
            slot.second += 1;
        }
        const auto own = by_label.find(labels[i]);
        if (own == by_label.end() || own->second.second == 0) continue;  // singleton cluster scores 0
        const double a = own->second.first / static_cast<double>(own->second.second);
        double b = INFINITY;
        for (const auto& [lab, s] : by_label)
            if (lab != labels[i]) b = std::min(b, s.first / static_cast<double>(s.second));
        total += (b - a) / std::max(a, b);
    }
    return total / static_cast<double>(n);
}

}  // namespace testsupport
