#pragma once

// Document encoders: a d x e token matrix to one embedding in R^h, built from
// engine primitives so the tape reaches every token coordinate.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "gradproj/ad/graph.hpp"
#include "gradproj/matrix.hpp"

namespace gradproj::encoder {

enum class Kind { mean_pool, tiny_attention };

std::string_view to_string(Kind kind);
Kind parse_kind(std::string_view text);

// Single-head attention weights. wq, wk, wv are e x e; wo is e x h.
struct AttentionParams {
    Matrix wq, wk, wv, wo;
};

struct EncoderConfig {
    Kind kind = Kind::mean_pool;
    std::size_t e = 0;
    std::size_t h = 0;
    std::uint64_t seed = 0;
    AttentionParams params;  // tiny_attention only

    // Throws ConfigError on wrong shapes, non-finite parameters or h != e for
    // mean_pool.
    void validate() const;
};

struct EncodeResult {
    ad::Value embedding;                      // vector(h)
    std::optional<std::vector<double>> attention;  // per token, tiny_attention only
};

EncodeResult encode_mean_pool(const ad::Value& x);

// Q = XWq, K = XWk, V = XWv, S = softmax_rows(QK^T / sqrt(e)),
// embedding = mean_rows(S V Wo), attention = column means of S.
EncodeResult encode_tiny_attention(const ad::Value& x, const EncoderConfig& cfg);

EncodeResult encode(const ad::Value& x, const EncoderConfig& cfg);

// Seeded parameters, uniform in [-1/sqrt(e), 1/sqrt(e)], drawn Wq, Wk, Wv, Wo
// in row-major order. mean_pool configs get h = e and no parameters.
EncoderConfig init_params(Kind kind, std::size_t e, std::size_t h, std::uint64_t seed);

// JSON object {"Wq": {"rows", "cols", "data"}, "Wk": ..., "Wv": ..., "Wo": ...}
// replacing cfg.params. Shapes are checked against cfg.
void load_params(const std::filesystem::path& path, EncoderConfig& cfg);
void save_params(const std::filesystem::path& path, const EncoderConfig& cfg);

}  // namespace gradproj::encoder
