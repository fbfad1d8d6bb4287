#include "gradproj/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "gradproj/errors.hpp"
#include "gradproj/rng.hpp"

namespace gradproj::cloud {
namespace {

using attribution::WordScore;

constexpr std::size_t kMaxLloydIterations = 100;
constexpr const char* kColorCycle[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#8c564b",
                                       "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79"};

double sq_dist(const Matrix& m, std::size_t i, const std::array<double, 2>& c) {
    const double dx = m(i, 0) - c[0], dy = m(i, 1) - c[1];
    return dx * dx + dy * dy;
}

bool is_hex_color(const std::string& s) {
    if (s.size() != 7 || s[0] != '#') return false;
    return std::all_of(s.begin() + 1, s.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
}

void check_aligned(const attribution::TangentMap& tm, const corpus::TokenSequence& seq, const char* what) {
    if (tm.doc_id != seq.doc_id || tm.magnitudes.size() != seq.tokens.size()) {
        throw std::invalid_argument(std::string(what) + ": tangent map for '" + tm.doc_id +
                                    "' is not aligned with tokens of '" + seq.doc_id + "'");
    }
}

}  // namespace

std::vector<WordScore> top_k_words(std::span<const WordScore> doc_scores, std::size_t k) {
    if (k == 0) throw ConfigError("top_k must be >= 1");
    std::vector<WordScore> ranked(doc_scores.begin(), doc_scores.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const WordScore& a, const WordScore& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.position < b.position;
    });
    if (ranked.size() > k) ranked.resize(k);
    return ranked;
}

std::vector<WordGroup> group_by_word(std::span<const DocTopK> docs) {
    std::map<std::string, WordGroup> groups;
    for (const DocTopK& doc : docs) {
        for (const WordScore& s : doc.top) {
            WordGroup& g = groups[s.word];
            g.word = s.word;
            if (g.members.empty() || g.members.back().doc_id != doc.doc_id) {
                g.members.push_back({doc.doc_id, 0, doc.position, 0.0});
            }
            Member& m = g.members.back();
            ++m.count;
            m.score += s.score;
            g.total_score += s.score;
        }
    }
    std::vector<WordGroup> out;
    out.reserve(groups.size());
    for (auto& [word, g] : groups) out.push_back(std::move(g));
    return out;
}

Point weighted_centroid(const WordGroup& group) {
    if (group.members.empty()) throw std::invalid_argument("weighted_centroid: empty group");
    double sx = 0.0, sy = 0.0, w = 0.0;
    for (const Member& m : group.members) {
        const double c = static_cast<double>(m.count);
        sx += c * m.position.x;
        sy += c * m.position.y;
        w += c;
    }
    return {sx / w, sy / w};
}

std::vector<WordGroup> subdivide(std::span<const WordGroup> groups, double tau) {
    std::vector<WordGroup> out;
    for (const WordGroup& g : groups) {
        const std::size_t m = g.members.size();
        std::vector<std::size_t> parent(m);
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](std::size_t i) {
            while (parent[i] != i) i = parent[i] = parent[parent[i]];
            return i;
        };
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i + 1; j < m; ++j) {
                const double d = std::hypot(g.members[i].position.x - g.members[j].position.x,
                                            g.members[i].position.y - g.members[j].position.y);
                if (d <= tau) parent[find(j)] = find(i);
            }
        }
        // Components in order of their first member.
        std::vector<std::size_t> slot(m, m);
        std::vector<WordGroup> parts;
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t root = find(i);
            if (slot[root] == m) {
                slot[root] = parts.size();
                parts.push_back({g.word, {}, 0.0});
            }
            WordGroup& part = parts[slot[root]];
            part.members.push_back(g.members[i]);
            part.total_score += g.members[i].score;
        }
        for (WordGroup& p : parts) out.push_back(std::move(p));
    }
    return out;
}

Palette parse_palette(std::string_view json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("palette: ") + e.what());
    }
    if (!doc.is_object()) throw DataError("palette must be a JSON object of label -> color");
    Palette p;
    for (const auto& [label, color] : doc.items()) {
        if (!color.is_string() || !is_hex_color(color.get<std::string>())) {
            throw DataError("palette: color for '" + label + "' must be a #rrggbb string");
        }
        p[label] = color.get<std::string>();
    }
    p.emplace(kMixedKey, kPurple);
    return p;
}

Palette load_palette(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open palette " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_palette(buf.str());
}

Palette default_palette(std::span<const std::string> labels) {
    std::vector<std::string> sorted(labels.begin(), labels.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    Palette p;
    for (std::size_t i = 0; i < sorted.size(); ++i) p[sorted[i]] = kColorCycle[i % std::size(kColorCycle)];
    p[kMixedKey] = kPurple;
    return p;
}

std::vector<CloudEntry> build_cloud(std::span<const WordGroup> groups, const std::map<std::string, std::string>& labels,
                                    const Palette& palette) {
    using MemberKey = std::vector<std::pair<std::string, std::size_t>>;
    std::map<MemberKey, const WordGroup*> winners;
    for (const WordGroup& g : groups) {
        std::size_t total = 0;
        for (const Member& m : g.members) total += m.count;
        if (total <= 1) continue;
        MemberKey key;
        for (const Member& m : g.members) key.emplace_back(m.doc_id, m.count);
        std::sort(key.begin(), key.end());
        auto [it, inserted] = winners.emplace(std::move(key), &g);
        if (inserted) continue;
        const WordGroup& cur = *it->second;
        if (g.total_score > cur.total_score || (g.total_score == cur.total_score && g.word < cur.word)) it->second = &g;
    }

    const auto mixed = palette.find(kMixedKey);
    const std::string mixed_color = mixed == palette.end() ? kPurple : mixed->second;
    std::vector<CloudEntry> out;
    for (const auto& [key, gp] : winners) {
        const WordGroup& g = *gp;
        CloudEntry e{g.word, weighted_centroid(g), g.total_score, mixed_color, {}};
        std::optional<std::string> shared;
        bool uniform = true;
        for (const Member& m : g.members) {
            e.members.push_back(m.doc_id);
            const auto lab = labels.find(m.doc_id);
            if (lab == labels.end()) throw DataError("document '" + m.doc_id + "' has no label for cloud coloring");
            if (!shared) shared = lab->second;
            else if (*shared != lab->second) uniform = false;
        }
        if (uniform) {
            const auto c = palette.find(*shared);
            if (c == palette.end()) throw DataError("palette has no color for label '" + *shared + "'");
            e.color = c->second;
        }
        out.push_back(std::move(e));
    }
    std::sort(out.begin(), out.end(), [](const CloudEntry& a, const CloudEntry& b) {
        if (a.size != b.size) return a.size > b.size;
        return a.word < b.word;
    });
    return out;
}

std::vector<std::size_t> pseudo_labels(const Matrix& coords, std::size_t k, std::uint64_t seed) {
    const std::size_t n = coords.rows;
    if (coords.cols != 2) throw std::invalid_argument("pseudo_labels: coordinates must be n x 2");
    if (k == 0 || k > n) {
        throw ConfigError("pseudo_label_k must be in [1, " + std::to_string(n) + "], got " + std::to_string(k));
    }
    Rng rng(seed);
    std::vector<std::array<double, 2>> centers;
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::size_t first = rng.below(n);
    centers.push_back({coords(first, 0), coords(first, 1)});
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            best[i] = std::min(best[i], sq_dist(coords, i, centers.back()));
            total += best[i];
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            double r = rng.uniform() * total;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                if (best[i] > 0.0 && r < best[i]) {
                    pick = i;
                    break;
                }
                r -= best[i];
            }
            while (best[pick] == 0.0) --pick;  // guard against rounding at the tail
        }
        centers.push_back({coords(pick, 0), coords(pick, 1)});
    }

    std::vector<std::size_t> assign(n, k);
    for (std::size_t iter = 0; iter < kMaxLloydIterations; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t arg = 0;
            double dmin = sq_dist(coords, i, centers[0]);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = sq_dist(coords, i, centers[c]);
                if (d < dmin) {
                    dmin = d;
                    arg = c;
                }
            }
            if (assign[i] != arg) {
                assign[i] = arg;
                changed = true;
            }
        }
        if (!changed) break;
        std::vector<std::array<double, 3>> acc(k, {0.0, 0.0, 0.0});
        for (std::size_t i = 0; i < n; ++i) {
            acc[assign[i]][0] += coords(i, 0);
            acc[assign[i]][1] += coords(i, 1);
            acc[assign[i]][2] += 1.0;
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (acc[c][2] > 0.0) centers[c] = {acc[c][0] / acc[c][2], acc[c][1] / acc[c][2]};
        }
    }

    std::vector<std::size_t> relabel(k, k), out(n);
    std::size_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (relabel[assign[i]] == k) relabel[assign[i]] = next++;
        out[i] = relabel[assign[i]];
    }
    return out;
}

HeatmapPayload heatmap_payload(const attribution::TangentMap& tmap, const corpus::TokenSequence& seq) {
    check_aligned(tmap, seq, "heatmap_payload");
    const double peak = tmap.magnitudes.empty() ? 0.0 : *std::max_element(tmap.magnitudes.begin(), tmap.magnitudes.end());
    HeatmapPayload out{seq.doc_id, {}};
    for (std::size_t j = 0; j < seq.tokens.size(); ++j) {
        const double m = tmap.magnitudes[j];
        out.entries.push_back({seq.tokens[j].word, seq.tokens[j].position, m, peak > 0.0 ? m / peak : 0.0});
    }
    return out;
}

std::vector<Marker> marker_payload(std::span<const attribution::TangentMap> tmaps,
                                   std::span<const corpus::TokenSequence> seqs, const Matrix& coords) {
    if (tmaps.size() != seqs.size() || coords.rows != tmaps.size() || coords.cols != 2) {
        throw std::invalid_argument("marker_payload: inputs are not aligned");
    }
    std::vector<Marker> out;
    for (std::size_t i = 0; i < tmaps.size(); ++i) {
        check_aligned(tmaps[i], seqs[i], "marker_payload");
        const auto& mags = tmaps[i].magnitudes;
        if (mags.empty()) throw std::invalid_argument("marker_payload: document '" + seqs[i].doc_id + "' has no words");
        // max_element returns the first maximum, i.e. the earliest position.
        const std::size_t top = static_cast<std::size_t>(std::max_element(mags.begin(), mags.end()) - mags.begin());
        out.push_back({seqs[i].doc_id, {coords(i, 0), coords(i, 1)}, seqs[i].tokens[top].word, mags[top]});
    }
    return out;
}

}  // namespace gradproj::cloud
