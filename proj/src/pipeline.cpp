#include "gradproj/pipeline.hpp"

#include <chrono>
#include <set>

#include "gradproj/ad/ops.hpp"
#include "gradproj/errors.hpp"

namespace gradproj {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Re-raises a pipeline error with the stage (and document) prefixed, keeping
// its type so the CLI exit code is unchanged.
template <typename Fn>
auto in_stage(const std::string& stage, const std::string& doc_id, Fn&& fn) -> decltype(fn()) {
    auto context = [&](const std::exception& e) {
        std::string msg = "stage '" + stage + "'";
        if (!doc_id.empty()) msg += ", document '" + doc_id + "'";
        return msg + ": " + e.what();
    };
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw ConfigError(context(e));
    } catch (const DataError& e) {
        throw DataError(context(e));
    } catch (const NumericError& e) {
        throw NumericError(context(e));
    }
}

void require_file(const std::filesystem::path& p, const char* what) {
    if (!std::filesystem::is_regular_file(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
}

std::vector<corpus::ResolvedDocument> resolve_all(const std::vector<corpus::TokenSequence>& seqs,
                                                  const corpus::WordVectorTable& table, corpus::OovPolicy policy,
                                                  ad::Graph& g) {
    std::vector<corpus::ResolvedDocument> out;
    out.reserve(seqs.size());
    for (const auto& s : seqs) {
        out.push_back(in_stage("resolve", s.doc_id, [&] { return corpus::resolve(s, table, policy, g); }));
    }
    return out;
}

std::vector<ad::Value> leaves_of(const std::vector<corpus::ResolvedDocument>& docs) {
    std::vector<ad::Value> out;
    for (const auto& d : docs) out.push_back(d.words);
    return out;
}

std::vector<cloud::CloudEntry> make_cloud(const std::vector<attribution::WordScore>& scores,
                                          const std::vector<ProjectedDoc>& projection, const PipelineConfig& cfg,
                                          const std::map<std::string, std::string>& labels,
                                          const cloud::Palette& palette) {
    std::vector<cloud::DocTopK> tops;
    std::size_t cursor = 0;
    for (const ProjectedDoc& p : projection) {
        const std::size_t begin = cursor;
        while (cursor < scores.size() && scores[cursor].doc_id == p.id) ++cursor;
        const std::span<const attribution::WordScore> doc_scores(scores.data() + begin, cursor - begin);
        tops.push_back({p.id, {p.x, p.y}, cloud::top_k_words(doc_scores, cfg.top_k)});
    }
    std::vector<cloud::WordGroup> groups = cloud::group_by_word(tops);
    if (cfg.cloud.subdivide_tau) groups = cloud::subdivide(groups, *cfg.cloud.subdivide_tau);
    return cloud::build_cloud(groups, labels, palette);
}

}  // namespace

Inputs load_inputs(const PipelineConfig& cfg) {
    require_file(cfg.corpus_path, "corpus_path");
    require_file(cfg.vectors_path, "vectors_path");
    if (cfg.stopwords_path) require_file(*cfg.stopwords_path, "stopwords_path");
    if (cfg.cloud.palette_path) require_file(*cfg.cloud.palette_path, "cloud.palette_path");
    if (cfg.encoder.params_path) require_file(*cfg.encoder.params_path, "encoder.params_path");
    Inputs in;
    in.documents = in_stage("load corpus", "", [&] { return corpus::load_corpus(cfg.corpus_path); });
    in.vectors = in_stage("load vectors", "", [&] { return corpus::load_word_vectors(cfg.vectors_path); });
    if (cfg.stopwords_path) in.stopwords = corpus::load_stopwords(*cfg.stopwords_path);
    return in;
}

encoder::EncoderConfig make_encoder(const PipelineConfig& cfg, std::size_t e) {
    encoder::EncoderConfig enc = encoder::init_params(cfg.encoder.kind, e, cfg.encoder.h.value_or(e), cfg.seed);
    if (cfg.encoder.params_path) {
        if (cfg.encoder.kind != encoder::Kind::tiny_attention) throw ConfigError("encoder.params_path requires tiny_attention");
        encoder::load_params(*cfg.encoder.params_path, enc);
    }
    enc.validate();
    return enc;
}

Forward encode_and_project(std::span<const ad::Value> words, const encoder::EncoderConfig& enc,
                           const projector::ProjectorConfig& proj) {
    Forward f;
    std::vector<ad::Value> rows;
    for (const ad::Value& w : words) {
        f.encodings.push_back(encoder::encode(w, enc));
        rows.push_back(f.encodings.back().embedding);
    }
    if (rows.empty()) throw DataError("corpus is empty");
    f.embeddings = ad::stack(rows);
    f.projection = projector::project(f.embeddings, proj);
    return f;
}

Artifact run_pipeline(const PipelineConfig& cfg) { return run_pipeline(cfg, load_inputs(cfg)); }

Artifact run_pipeline(const PipelineConfig& cfg_in, const Inputs& inputs) {
    PipelineConfig cfg = cfg_in;
    cfg.projector.seed = cfg.seed;
    cfg.validate();
    const auto& docs = inputs.documents;
    const std::size_t n = docs.size();
    const std::size_t min_docs = cfg.projector.kind == projector::Kind::tsne ? 4 : 2;
    if (n < min_docs) {
        throw DataError("corpus has " + std::to_string(n) + " documents; " + std::string(projector::to_string(cfg.projector.kind)) +
                        " needs at least " + std::to_string(min_docs));
    }
    const encoder::EncoderConfig enc = in_stage("encoder setup", "", [&] { return make_encoder(cfg, inputs.vectors.dimension()); });

    std::vector<corpus::TokenSequence> seqs;
    for (const auto& d : docs) {
        seqs.push_back(in_stage("tokenize", d.id, [&] {
            return corpus::attach_vocabulary(corpus::tokenize(d, inputs.stopwords.empty() ? nullptr : &inputs.stopwords),
                                             inputs.vectors);
        }));
    }

    // Untracked forward first, so the recorded run does not also pay for
    // cold caches.
    auto t0 = Clock::now();
    {
        ad::Graph untracked(ad::Recording::disabled);
        const auto resolved = resolve_all(seqs, inputs.vectors, cfg.oov_policy, untracked);
        const auto leaves = leaves_of(resolved);
        in_stage("forward", "", [&] { return encode_and_project(leaves, enc, cfg.projector); });
    }
    const double untracked_ms = ms_since(t0);

    ad::Graph g;
    t0 = Clock::now();
    const auto resolved = resolve_all(seqs, inputs.vectors, cfg.oov_policy, g);
    const auto leaves = leaves_of(resolved);
    const Forward fwd = in_stage("forward", "", [&] { return encode_and_project(leaves, enc, cfg.projector); });
    const double forward_ms = ms_since(t0);

    t0 = Clock::now();
    std::vector<attribution::TangentMap> tmaps;
    std::vector<corpus::TokenSequence> surviving;
    for (std::size_t i = 0; i < n; ++i) {
        tmaps.push_back(in_stage("attribution", resolved[i].doc_id, [&] {
            return attribution::tangent_map(fwd.projection.coords, i, resolved[i], cfg.reduction);
        }));
        surviving.push_back(attribution::surviving_tokens(resolved[i]));
    }
    const double backward_ms = ms_since(t0);

    const Matrix coords = projector::to_matrix(fwd.projection.coords);

    // Labels: the corpus's own when every document has one, otherwise
    // pseudo-labels from the layout for all documents.
    const bool all_labeled = std::all_of(docs.begin(), docs.end(), [](const auto& d) { return d.label.has_value(); });
    std::vector<std::string> labels(n);
    if (all_labeled) {
        for (std::size_t i = 0; i < n; ++i) labels[i] = *docs[i].label;
    } else {
        const auto ids = in_stage("pseudo-labels", "", [&] {
            return cloud::pseudo_labels(coords, std::min(cfg.cloud.pseudo_label_k, n), cfg.seed);
        });
        for (std::size_t i = 0; i < n; ++i) labels[i] = "cluster-" + std::to_string(ids[i]);
    }
    const cloud::Palette palette = in_stage("palette", "", [&] {
        return cfg.cloud.palette_path ? cloud::load_palette(*cfg.cloud.palette_path) : cloud::default_palette(labels);
    });

    Artifact a;
    a.config = config_to_json(cfg);
    std::map<std::string, std::string> label_of;
    for (std::size_t i = 0; i < n; ++i) {
        a.projection.push_back({docs[i].id, coords(i, 0), coords(i, 1), labels[i]});
        label_of[docs[i].id] = labels[i];
        a.heatmaps.push_back(cloud::heatmap_payload(tmaps[i], surviving[i]));
    }
    a.markers = cloud::marker_payload(tmaps, surviving, coords);
    a.scoring = std::string(attribution::to_string(cfg.scoring));
    a.palette = palette;

    const auto grad_scores = attribution::gradient_scores(tmaps, surviving);
    a.clouds["gradient"] = in_stage("cloud", "", [&] { return make_cloud(grad_scores, a.projection, cfg, label_of, palette); });
    if (cfg.encoder.kind == encoder::Kind::tiny_attention) {
        const auto att_scores = attribution::attention_scores(fwd.encodings, surviving);
        a.clouds["attention"] = in_stage("cloud", "", [&] { return make_cloud(att_scores, a.projection, cfg, label_of, palette); });
    }

    a.trace = {cfg.projector.kind == projector::Kind::mds ? "stress" : "kl", fwd.projection.trace};
    a.timing = {forward_ms, untracked_ms, backward_ms, untracked_ms > 0.0 ? forward_ms / untracked_ms : 0.0,
                g.backward_passes()};
    return a;
}

}  // namespace gradproj
