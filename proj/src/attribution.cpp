#include "gradproj/attribution.hpp"

#include <cmath>

#include "gradproj/ad/ops.hpp"
#include "gradproj/errors.hpp"

namespace gradproj::attribution {
namespace {

void check_aligned(std::size_t n_items, std::span<const corpus::TokenSequence> seqs, const char* what) {
    if (n_items != seqs.size()) {
        throw std::invalid_argument(std::string(what) + ": " + std::to_string(n_items) + " results for " +
                                    std::to_string(seqs.size()) + " token sequences");
    }
}

}  // namespace

std::string_view to_string(Reduction r) { return r == Reduction::grad_times_input ? "grad_times_input" : "row_norm"; }

Reduction parse_reduction(std::string_view text) {
    if (text == "grad_times_input") return Reduction::grad_times_input;
    if (text == "row_norm") return Reduction::row_norm;
    throw ConfigError("unknown reduction '" + std::string(text) + "'");
}

std::string_view to_string(Source s) { return s == Source::gradient ? "gradient" : "attention"; }

Source parse_source(std::string_view text) {
    if (text == "gradient") return Source::gradient;
    if (text == "attention") return Source::attention;
    throw ConfigError("unknown scoring '" + std::string(text) + "'");
}

double impact_magnitude(double gx, double gy) { return std::sqrt(gx * gx + gy * gy); }

TangentMap tangent_map(const ad::Value& vx, const ad::Value& vy, const ad::Value& words, std::string doc_id,
                       Reduction reduction) {
    ad::Graph* g = words.graph();
    if (g == nullptr || vx.graph() != g || vy.graph() != g) {
        throw std::invalid_argument("tangent_map: outputs are not on the document's graph");
    }
    TangentMap tm;
    tm.doc_id = std::move(doc_id);
    tm.d = words.rows();
    tm.e = words.cols();
    tm.reduction = reduction;
    const std::size_t de = tm.d * tm.e;
    tm.jacobian.resize(2 * de);

    const std::size_t passes_before = g->backward_passes();
    const ad::GradientMap gx = g->backward(vx);
    const auto jx = gx[words];
    std::copy(jx.begin(), jx.end(), tm.jacobian.begin());
    const ad::GradientMap gy = g->backward(vy);
    const auto jy = gy[words];
    std::copy(jy.begin(), jy.end(), tm.jacobian.begin() + static_cast<std::ptrdiff_t>(de));
    if (g->backward_passes() - passes_before != 2) throw std::logic_error("tangent_map: expected exactly two passes");

    const auto x = words.data();
    tm.impact.resize(tm.d);
    tm.magnitudes.resize(tm.d);
    for (std::size_t j = 0; j < tm.d; ++j) {
        for (std::size_t axis = 0; axis < 2; ++axis) {
            const double* row = tm.jacobian.data() + (axis * tm.d + j) * tm.e;
            double acc = 0.0;
            for (std::size_t k = 0; k < tm.e; ++k) {
                acc += reduction == Reduction::grad_times_input ? row[k] * x[j * tm.e + k] : row[k] * row[k];
            }
            tm.impact[j][axis] = reduction == Reduction::grad_times_input ? acc : std::sqrt(acc);
        }
        tm.magnitudes[j] = impact_magnitude(tm.impact[j][0], tm.impact[j][1]);
        if (!std::isfinite(tm.magnitudes[j])) {
            throw NumericError("tangent_map: non-finite impact for document '" + tm.doc_id + "'");
        }
    }
    return tm;
}

TangentMap tangent_map(const ad::Value& coords, std::size_t row, const corpus::ResolvedDocument& doc,
                       Reduction reduction) {
    if (coords.graph() != doc.words.graph()) {
        throw std::invalid_argument("tangent_map: outputs are not on the document's graph");
    }
    return tangent_map(ad::select_entry(coords, row, 0), ad::select_entry(coords, row, 1), doc.words, doc.doc_id,
                       reduction);
}

corpus::TokenSequence surviving_tokens(const corpus::ResolvedDocument& doc) { return {doc.doc_id, doc.tokens}; }

std::vector<WordScore> gradient_scores(std::span<const TangentMap> tmaps, std::span<const corpus::TokenSequence> seqs) {
    check_aligned(tmaps.size(), seqs, "gradient_scores");
    std::vector<WordScore> out;
    for (std::size_t i = 0; i < tmaps.size(); ++i) {
        const TangentMap& tm = tmaps[i];
        const corpus::TokenSequence& seq = seqs[i];
        if (tm.doc_id != seq.doc_id || tm.magnitudes.size() != seq.tokens.size()) {
            throw std::invalid_argument("gradient_scores: tangent map for '" + tm.doc_id +
                                        "' is not aligned with tokens of '" + seq.doc_id + "'");
        }
        for (std::size_t j = 0; j < seq.tokens.size(); ++j) {
            out.push_back({seq.doc_id, seq.tokens[j].position, seq.tokens[j].word, tm.magnitudes[j], Source::gradient});
        }
    }
    return out;
}

std::vector<WordScore> attention_scores(std::span<const encoder::EncodeResult> results,
                                        std::span<const corpus::TokenSequence> seqs) {
    check_aligned(results.size(), seqs, "attention_scores");
    std::vector<WordScore> out;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!results[i].attention) throw ConfigError("encoder exposes no attention");
        const std::vector<double>& a = *results[i].attention;
        const corpus::TokenSequence& seq = seqs[i];
        if (a.size() != seq.tokens.size()) {
            throw std::invalid_argument("attention_scores: attention length does not match tokens of '" + seq.doc_id + "'");
        }
        for (std::size_t j = 0; j < a.size(); ++j) {
            out.push_back({seq.doc_id, seq.tokens[j].position, seq.tokens[j].word, a[j], Source::attention});
        }
    }
    return out;
}

}  // namespace gradproj::attribution
