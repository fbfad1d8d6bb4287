#include "gradproj/artifact.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "gradproj/errors.hpp"

namespace gradproj {
namespace {

using nlohmann::ordered_json;
using cloud::CloudEntry;

constexpr double kSvgWidth = 800.0;
constexpr double kSvgHeight = 600.0;
constexpr double kSvgMargin = 50.0;
constexpr double kMinFont = 10.0;
constexpr double kMaxFont = 36.0;

ordered_json entries_json(const std::vector<CloudEntry>& entries) {
    ordered_json arr = ordered_json::array();
    for (const CloudEntry& e : entries) {
        arr.push_back({{"word", e.word},
                       {"x", e.centroid.x},
                       {"y", e.centroid.y},
                       {"size", e.size},
                       {"color", e.color},
                       {"members", e.members}});
    }
    return arr;
}

std::vector<CloudEntry> entries_from_json(const ordered_json& arr) {
    std::vector<CloudEntry> out;
    for (const auto& e : arr) {
        out.push_back({e.at("word").get<std::string>(),
                       {e.at("x").get<double>(), e.at("y").get<double>()},
                       e.at("size").get<double>(),
                       e.at("color").get<std::string>(),
                       e.at("members").get<std::vector<std::string>>()});
    }
    return out;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

const std::vector<CloudEntry>& pick_cloud(const Artifact& a, const std::optional<std::string>& scoring) {
    const std::string key = scoring.value_or(a.scoring);
    const auto it = a.clouds.find(key);
    if (it == a.clouds.end()) throw DataError("artifact has no '" + key + "' cloud");
    return it->second;
}

}  // namespace

const std::vector<CloudEntry>& Artifact::cloud() const { return pick_cloud(*this, std::nullopt); }

const cloud::HeatmapPayload* Artifact::heatmap(const std::string& doc_id) const {
    for (const auto& h : heatmaps)
        if (h.doc_id == doc_id) return &h;
    return nullptr;
}

ordered_json to_json(const Artifact& a) {
    ordered_json j;
    j["schema_version"] = a.schema_version;
    j["config"] = a.config;
    ordered_json proj = ordered_json::array();
    for (const ProjectedDoc& p : a.projection) proj.push_back({{"id", p.id}, {"x", p.x}, {"y", p.y}, {"label", p.label}});
    j["projection"] = std::move(proj);
    ordered_json heat = ordered_json::object();
    for (const auto& h : a.heatmaps) {
        ordered_json arr = ordered_json::array();
        for (const auto& e : h.entries) {
            arr.push_back({{"word", e.word}, {"position", e.position}, {"magnitude", e.magnitude}, {"intensity", e.intensity}});
        }
        heat[h.doc_id] = std::move(arr);
    }
    j["heatmaps"] = std::move(heat);
    ordered_json markers = ordered_json::array();
    for (const auto& m : a.markers) {
        markers.push_back({{"id", m.doc_id}, {"x", m.position.x}, {"y", m.position.y}, {"word", m.word}, {"magnitude", m.magnitude}});
    }
    j["markers"] = std::move(markers);
    j["scoring"] = a.scoring;
    j["cloud"] = entries_json(a.cloud());
    ordered_json clouds = ordered_json::object();
    for (const auto& [k, v] : a.clouds) clouds[k] = entries_json(v);
    j["clouds"] = std::move(clouds);
    ordered_json palette = ordered_json::object();
    for (const auto& [k, v] : a.palette) palette[k] = v;
    j["palette"] = std::move(palette);
    j["traces"] = {{"kind", a.trace.kind}, {"values", a.trace.values}};
    j["timing"] = {{"forward_ms", a.timing.forward_ms},
                   {"forward_untracked_ms", a.timing.forward_untracked_ms},
                   {"backward_ms", a.timing.backward_ms},
                   {"overhead_ratio", a.timing.overhead_ratio},
                   {"backward_passes", a.timing.backward_passes}};
    return j;
}

Artifact artifact_from_json(const ordered_json& j) {
    try {
        Artifact a;
        a.schema_version = j.at("schema_version").get<int>();
        if (a.schema_version != kSchemaVersion) {
            throw DataError("unsupported artifact schema_version " + std::to_string(a.schema_version));
        }
        a.config = j.at("config");
        for (const auto& p : j.at("projection")) {
            a.projection.push_back({p.at("id").get<std::string>(), p.at("x").get<double>(), p.at("y").get<double>(),
                                    p.at("label").get<std::string>()});
        }
        for (const auto& [id, arr] : j.at("heatmaps").items()) {
            cloud::HeatmapPayload h{id, {}};
            for (const auto& e : arr) {
                h.entries.push_back({e.at("word").get<std::string>(), e.at("position").get<std::size_t>(),
                                     e.at("magnitude").get<double>(), e.at("intensity").get<double>()});
            }
            a.heatmaps.push_back(std::move(h));
        }
        for (const auto& m : j.at("markers")) {
            a.markers.push_back({m.at("id").get<std::string>(),
                                 {m.at("x").get<double>(), m.at("y").get<double>()},
                                 m.at("word").get<std::string>(),
                                 m.at("magnitude").get<double>()});
        }
        a.scoring = j.at("scoring").get<std::string>();
        for (const auto& [k, v] : j.at("clouds").items()) a.clouds[k] = entries_from_json(v);
        if (!a.clouds.contains(a.scoring)) a.clouds[a.scoring] = entries_from_json(j.at("cloud"));
        for (const auto& [k, v] : j.at("palette").items()) a.palette[k] = v.get<std::string>();
        a.trace.kind = j.at("traces").at("kind").get<std::string>();
        a.trace.values = j.at("traces").at("values").get<std::vector<double>>();
        const auto& t = j.at("timing");
        a.timing = {t.at("forward_ms").get<double>(), t.at("forward_untracked_ms").get<double>(),
                    t.at("backward_ms").get<double>(), t.at("overhead_ratio").get<double>(),
                    t.at("backward_passes").get<std::size_t>()};
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed artifact: ") + e.what());
    }
}

std::string content_json(const Artifact& a) {
    ordered_json j = to_json(a);
    j.erase("timing");
    return j.dump();
}

void export_json(const Artifact& a, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << to_json(a).dump(1) << '\n';
    if (!out) throw DataError("failed writing " + path.string());
}

Artifact load_artifact(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open artifact " + path.string());
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("artifact " + path.string() + ": " + e.what());
    }
    return artifact_from_json(j);
}

std::string render_svg(const Artifact& a, const std::optional<std::string>& scoring) {
    const auto& entries = pick_cloud(a, scoring);
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    auto extend = [&](double x, double y) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
    };
    for (const auto& p : a.projection) extend(p.x, p.y);
    for (const auto& e : entries) extend(e.centroid.x, e.centroid.y);
    if (!std::isfinite(x0)) x0 = x1 = y0 = y1 = 0.0;
    const double span = std::max({x1 - x0, y1 - y0, 1e-12});
    const double scale = std::min(kSvgWidth, kSvgHeight) - 2.0 * kSvgMargin;
    auto sx = [&](double x) { return kSvgMargin + (x - x0) / span * scale; };
    // SVG y grows downwards.
    auto sy = [&](double y) { return kSvgMargin + (y1 - y) / span * scale; };

    double s_min = INFINITY, s_max = -INFINITY;
    for (const auto& e : entries) {
        s_min = std::min(s_min, e.size);
        s_max = std::max(s_max, e.size);
    }
    auto font = [&](double s) {
        if (!(s_max > s_min)) return kMaxFont;
        return kMinFont + (kMaxFont - kMinFont) * (s - s_min) / (s_max - s_min);
    };
    auto color_of = [&](const std::string& label) {
        const auto it = a.palette.find(label);
        return it == a.palette.end() ? std::string("#444444") : it->second;
    };

    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(2);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSvgWidth << "\" height=\"" << kSvgHeight
        << "\" viewBox=\"0 0 " << kSvgWidth << ' ' << kSvgHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<g class=\"documents\">\n";
    for (const auto& p : a.projection) {
        out << "<circle cx=\"" << sx(p.x) << "\" cy=\"" << sy(p.y) << "\" r=\"4\" fill=\"" << xml_escape(color_of(p.label))
            << "\" data-id=\"" << xml_escape(p.id) << "\"/>\n";
    }
    out << "</g>\n<g class=\"cloud\" text-anchor=\"middle\" font-family=\"sans-serif\">\n";
    for (const auto& e : entries) {
        out << "<text x=\"" << sx(e.centroid.x) << "\" y=\"" << sy(e.centroid.y) << "\" font-size=\"" << font(e.size)
            << "pt\" fill=\"" << xml_escape(e.color) << "\">" << xml_escape(e.word) << "</text>\n";
    }
    out << "</g>\n</svg>\n";
    return out.str();
}

void export_svg(const Artifact& a, const std::filesystem::path& path, const std::optional<std::string>& scoring) {
    const std::string svg = render_svg(a, scoring);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << svg;
    if (!out) throw DataError("failed writing " + path.string());
}

Comparison compare(const Artifact& a, const Artifact& b, const std::optional<std::string>& scoring) {
    std::set<std::string> ids_a, ids_b;
    for (const auto& p : a.projection) ids_a.insert(p.id);
    for (const auto& p : b.projection) ids_b.insert(p.id);
    if (ids_a != ids_b) throw DataError("compare: runs cover different document ids");

    Comparison c;
    c.scoring_a = scoring.value_or(a.scoring);
    c.scoring_b = scoring.value_or(b.scoring);
    c.sources_match = c.scoring_a == c.scoring_b;
    std::map<std::string, double> sa, sb;
    for (const auto& e : pick_cloud(a, scoring)) sa[e.word] += e.size;
    for (const auto& e : pick_cloud(b, scoring)) sb[e.word] += e.size;
    std::size_t shared = 0;
    for (const auto& [w, s] : sa) {
        const auto it = sb.find(w);
        if (it == sb.end()) {
            c.only_a.push_back(w);
        } else {
            ++shared;
            c.deltas.push_back({w, s, it->second, it->second - s});
        }
    }
    for (const auto& [w, s] : sb)
        if (!sa.contains(w)) c.only_b.push_back(w);
    const std::size_t uni = sa.size() + sb.size() - shared;
    c.jaccard = uni == 0 ? 1.0 : static_cast<double>(shared) / static_cast<double>(uni);
    return c;
}

ordered_json to_json(const Comparison& c) {
    ordered_json deltas = ordered_json::array();
    for (const auto& d : c.deltas) {
        deltas.push_back({{"word", d.word}, {"size_a", d.size_a}, {"size_b", d.size_b}, {"delta", d.delta}});
    }
    return {{"scoring_a", c.scoring_a}, {"scoring_b", c.scoring_b}, {"sources_match", c.sources_match},
            {"jaccard", c.jaccard},     {"only_a", c.only_a},       {"only_b", c.only_b},
            {"deltas", deltas}};
}

}  // namespace gradproj
