#include "gradproj/config.hpp"

#include <fstream>
#include <set>

#include "gradproj/errors.hpp"

namespace gradproj {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.contains(key)) throw ConfigError("unknown config key '" + where + key + "'");
    }
}

const json* field(const json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return nullptr;
    return &*it;
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
    if (const json* v = field(obj, key)) {
        try {
            out = v->get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config key '" + where + key + "' has the wrong type");
        }
    }
}

template <typename T>
void read(const json& obj, const char* key, std::optional<T>& out, const std::string& where) {
    if (field(obj, key) == nullptr) return;
    T v{};
    read(obj, key, v, where);
    out = std::move(v);
}

std::size_t read_count(const json& obj, const char* key, std::size_t fallback, const std::string& where) {
    const json* v = field(obj, key);
    if (v == nullptr) return fallback;
    if (!v->is_number_integer() || v->get<long long>() < 0) {
        throw ConfigError("config key '" + where + key + "' must be a non-negative integer");
    }
    return v->get<std::size_t>();
}

const json& section(const json& obj, const char* key, const std::string& where) {
    static const json empty = json::object();
    const json* v = field(obj, key);
    if (v == nullptr) return empty;
    if (!v->is_object()) throw ConfigError("config key '" + where + key + "' must be an object");
    return *v;
}

std::filesystem::path resolve_path(const std::string& p, const std::filesystem::path& base) {
    std::filesystem::path path(p);
    if (path.is_relative() && !base.empty()) path = base / path;
    return path.lexically_normal();
}

template <typename T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

json opt_path(const std::optional<std::filesystem::path>& p) { return p ? json(p->string()) : json(nullptr); }

}  // namespace

void PipelineConfig::validate() const {
    if (corpus_path.empty()) throw ConfigError("corpus_path is required");
    if (vectors_path.empty()) throw ConfigError("vectors_path is required");
    if (top_k == 0) throw ConfigError("top_k must be >= 1");
    if (encoder.h && *encoder.h == 0) throw ConfigError("encoder.h must be >= 1");
    if (scoring == attribution::Source::attention && encoder.kind != encoder::Kind::tiny_attention) {
        throw ConfigError("scoring 'attention' requires the tiny_attention encoder: encoder exposes no attention");
    }
    if (projector.mds.iterations == 0 || projector.tsne.iterations == 0) throw ConfigError("iterations must be >= 1");
    if (projector.pinned_iterations && *projector.pinned_iterations == 0) throw ConfigError("pinned_iterations must be >= 1");
    if (!(projector.mds.tol >= 0.0)) throw ConfigError("projector.mds.tol must be >= 0");
    if (projector.tsne.perplexity && !(*projector.tsne.perplexity >= 1.0)) throw ConfigError("perplexity must be >= 1");
    if (projector.tsne.learning_rate && !(*projector.tsne.learning_rate > 0.0)) {
        throw ConfigError("learning_rate must be positive");
    }
    if (cloud.pseudo_label_k == 0) throw ConfigError("cloud.pseudo_label_k must be >= 1");
    if (cloud.subdivide_tau && !(*cloud.subdivide_tau >= 0.0)) throw ConfigError("cloud.subdivide_tau must be >= 0");
    if (run_name.empty() || run_name.find_first_of("/\\") != std::string::npos) {
        throw ConfigError("run_name must be a non-empty name without path separators");
    }
}

PipelineConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(j,
                   {"corpus_path", "vectors_path", "stopwords_path", "encoder", "projector", "scoring", "reduction",
                    "top_k", "cloud", "oov_policy", "seed", "output_dir", "run_name"},
                   "");
    PipelineConfig cfg;
    std::string s;
    if (!field(j, "corpus_path")) throw ConfigError("corpus_path is required");
    if (!field(j, "vectors_path")) throw ConfigError("vectors_path is required");
    read(j, "corpus_path", s, "");
    cfg.corpus_path = resolve_path(s, base_dir);
    read(j, "vectors_path", s, "");
    cfg.vectors_path = resolve_path(s, base_dir);
    if (field(j, "stopwords_path")) {
        read(j, "stopwords_path", s, "");
        cfg.stopwords_path = resolve_path(s, base_dir);
    }

    const json& enc = section(j, "encoder", "");
    reject_unknown(enc, {"kind", "h", "params_path"}, "encoder.");
    if (field(enc, "kind")) {
        read(enc, "kind", s, "encoder.");
        cfg.encoder.kind = encoder::parse_kind(s);
    }
    if (field(enc, "h")) cfg.encoder.h = read_count(enc, "h", 0, "encoder.");
    if (field(enc, "params_path")) {
        read(enc, "params_path", s, "encoder.");
        cfg.encoder.params_path = resolve_path(s, base_dir);
    }

    const json& proj = section(j, "projector", "");
    reject_unknown(proj, {"kind", "mds", "tsne", "pinned_iterations", "pinned_sigmas"}, "projector.");
    auto& pc = cfg.projector;
    if (field(proj, "kind")) {
        read(proj, "kind", s, "projector.");
        pc.kind = projector::parse_kind(s);
    }
    const json& mds = section(proj, "mds", "projector.");
    reject_unknown(mds, {"iterations", "tol"}, "projector.mds.");
    pc.mds.iterations = read_count(mds, "iterations", pc.mds.iterations, "projector.mds.");
    read(mds, "tol", pc.mds.tol, "projector.mds.");
    const json& ts = section(proj, "tsne", "projector.");
    reject_unknown(ts,
                   {"perplexity", "iterations", "early_exaggeration", "exaggeration_iterations", "learning_rate",
                    "momentum", "final_momentum", "momentum_switch"},
                   "projector.tsne.");
    read(ts, "perplexity", pc.tsne.perplexity, "projector.tsne.");
    pc.tsne.iterations = read_count(ts, "iterations", pc.tsne.iterations, "projector.tsne.");
    read(ts, "early_exaggeration", pc.tsne.early_exaggeration, "projector.tsne.");
    pc.tsne.exaggeration_iterations =
        read_count(ts, "exaggeration_iterations", pc.tsne.exaggeration_iterations, "projector.tsne.");
    read(ts, "learning_rate", pc.tsne.learning_rate, "projector.tsne.");
    read(ts, "momentum", pc.tsne.momentum, "projector.tsne.");
    read(ts, "final_momentum", pc.tsne.final_momentum, "projector.tsne.");
    pc.tsne.momentum_switch = read_count(ts, "momentum_switch", pc.tsne.momentum_switch, "projector.tsne.");
    if (field(proj, "pinned_iterations")) pc.pinned_iterations = read_count(proj, "pinned_iterations", 0, "projector.");
    read(proj, "pinned_sigmas", pc.pinned_sigmas, "projector.");

    if (field(j, "scoring")) {
        read(j, "scoring", s, "");
        cfg.scoring = attribution::parse_source(s);
    }
    if (field(j, "reduction")) {
        read(j, "reduction", s, "");
        cfg.reduction = attribution::parse_reduction(s);
    }
    cfg.top_k = read_count(j, "top_k", cfg.top_k, "");

    const json& cl = section(j, "cloud", "");
    reject_unknown(cl, {"palette_path", "pseudo_label_k", "subdivide_tau"}, "cloud.");
    if (field(cl, "palette_path")) {
        read(cl, "palette_path", s, "cloud.");
        cfg.cloud.palette_path = resolve_path(s, base_dir);
    }
    cfg.cloud.pseudo_label_k = read_count(cl, "pseudo_label_k", cfg.cloud.pseudo_label_k, "cloud.");
    read(cl, "subdivide_tau", cfg.cloud.subdivide_tau, "cloud.");

    if (field(j, "oov_policy")) {
        read(j, "oov_policy", s, "");
        cfg.oov_policy = corpus::parse_oov_policy(s);
    }
    if (const json* seed = field(j, "seed")) {
        if (!seed->is_number_unsigned() && !(seed->is_number_integer() && seed->get<long long>() >= 0)) {
            throw ConfigError("config key 'seed' must be a non-negative integer");
        }
        cfg.seed = seed->get<std::uint64_t>();
    }
    if (field(j, "output_dir")) {
        read(j, "output_dir", s, "");
        cfg.output_dir = resolve_path(s, base_dir);
    }
    read(j, "run_name", cfg.run_name, "");
    cfg.projector.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

nlohmann::ordered_json config_to_json(const PipelineConfig& cfg) {
    const auto& pc = cfg.projector;
    nlohmann::ordered_json j;
    j["corpus_path"] = cfg.corpus_path.string();
    j["vectors_path"] = cfg.vectors_path.string();
    j["stopwords_path"] = opt_path(cfg.stopwords_path);
    j["encoder"] = {{"kind", encoder::to_string(cfg.encoder.kind)},
                    {"h", opt(cfg.encoder.h)},
                    {"params_path", opt_path(cfg.encoder.params_path)}};
    nlohmann::ordered_json proj;
    proj["kind"] = projector::to_string(pc.kind);
    proj["mds"] = {{"iterations", pc.mds.iterations}, {"tol", pc.mds.tol}};
    proj["tsne"] = {{"perplexity", opt(pc.tsne.perplexity)},
                    {"iterations", pc.tsne.iterations},
                    {"early_exaggeration", pc.tsne.early_exaggeration},
                    {"exaggeration_iterations", pc.tsne.exaggeration_iterations},
                    {"learning_rate", opt(pc.tsne.learning_rate)},
                    {"momentum", pc.tsne.momentum},
                    {"final_momentum", pc.tsne.final_momentum},
                    {"momentum_switch", pc.tsne.momentum_switch}};
    proj["pinned_iterations"] = opt(pc.pinned_iterations);
    if (pc.pinned_sigmas) proj["pinned_sigmas"] = *pc.pinned_sigmas;
    j["projector"] = std::move(proj);
    j["scoring"] = attribution::to_string(cfg.scoring);
    j["reduction"] = attribution::to_string(cfg.reduction);
    j["top_k"] = cfg.top_k;
    j["cloud"] = {{"palette_path", opt_path(cfg.cloud.palette_path)},
                  {"pseudo_label_k", cfg.cloud.pseudo_label_k},
                  {"subdivide_tau", opt(cfg.cloud.subdivide_tau)}};
    j["oov_policy"] = corpus::to_string(cfg.oov_policy);
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir.string();
    j["run_name"] = cfg.run_name;
    return j;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return config_from_json(j, path.parent_path());
}

}  // namespace gradproj
