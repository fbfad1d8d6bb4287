#pragma once

// Tangent maps: per-document Jacobians of the projected point with respect to
// the document's word inputs, reduced to one 2-vector per word instance.

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gradproj/ad/graph.hpp"
#include "gradproj/corpus.hpp"
#include "gradproj/encoder.hpp"

namespace gradproj::attribution {

enum class Reduction { grad_times_input, row_norm };
enum class Source { gradient, attention };

std::string_view to_string(Reduction r);
Reduction parse_reduction(std::string_view text);
std::string_view to_string(Source s);
Source parse_source(std::string_view text);

struct TangentMap {
    std::string doc_id;
    std::size_t d = 0;
    std::size_t e = 0;
    // 2 x d x e: jacobian[(axis * d + j) * e + k] = dv_axis / dX[j][k].
    std::vector<double> jacobian;
    std::vector<std::array<double, 2>> impact;  // d reduced vectors
    std::vector<double> magnitudes;             // d
    Reduction reduction = Reduction::grad_times_input;
};

struct WordScore {
    std::string doc_id;
    std::size_t position = 0;
    std::string word;
    double score = 0.0;
    Source source = Source::gradient;
};

double impact_magnitude(double gx, double gy);

// Two backward passes, seeded at vx and then vy. `words` is the document's
// d x e leaf; all three must live on the same graph.
TangentMap tangent_map(const ad::Value& vx, const ad::Value& vy, const ad::Value& words, std::string doc_id,
                       Reduction reduction);

// Same, for row `row` of an n x 2 coordinate matrix.
TangentMap tangent_map(const ad::Value& coords, std::size_t row, const corpus::ResolvedDocument& doc,
                       Reduction reduction);

// The tokens that survived resolve(), as a sequence aligned with the leaf rows.
corpus::TokenSequence surviving_tokens(const corpus::ResolvedDocument& doc);

std::vector<WordScore> gradient_scores(std::span<const TangentMap> tmaps, std::span<const corpus::TokenSequence> seqs);

// Throws ConfigError("encoder exposes no attention") for mean_pool results.
std::vector<WordScore> attention_scores(std::span<const encoder::EncodeResult> results,
                                        std::span<const corpus::TokenSequence> seqs);

}  // namespace gradproj::attribution
