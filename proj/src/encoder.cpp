#include "gradproj/encoder.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "gradproj/ad/ops.hpp"
#include "gradproj/errors.hpp"
#include "gradproj/rng.hpp"

namespace gradproj::encoder {
namespace {

using ad::Shape;
using ad::Value;

struct NamedMatrix {
    const char* name;
    Matrix AttentionParams::*member;
};

constexpr NamedMatrix kParams[] = {
    {"Wq", &AttentionParams::wq},
    {"Wk", &AttentionParams::wk},
    {"Wv", &AttentionParams::wv},
    {"Wo", &AttentionParams::wo},
};

std::pair<std::size_t, std::size_t> expected_shape(const EncoderConfig& cfg, const char* name) {
    if (std::string_view(name) == "Wo") return {cfg.e, cfg.h};
    return {cfg.e, cfg.e};
}

Value as_constant(ad::Graph& g, const Matrix& m) { return g.constant(m.data, Shape::matrix(m.rows, m.cols)); }

}  // namespace

std::string_view to_string(Kind kind) { return kind == Kind::mean_pool ? "mean_pool" : "tiny_attention"; }

Kind parse_kind(std::string_view text) {
    if (text == "mean_pool") return Kind::mean_pool;
    if (text == "tiny_attention") return Kind::tiny_attention;
    throw ConfigError("unknown encoder kind '" + std::string(text) + "'");
}

void EncoderConfig::validate() const {
    if (e == 0 || h == 0) throw ConfigError("encoder dimensions must be positive");
    if (kind == Kind::mean_pool) {
        if (h != e) throw ConfigError("mean_pool requires h == e (got h=" + std::to_string(h) + ", e=" + std::to_string(e) + ")");
        return;
    }
    for (const NamedMatrix& p : kParams) {
        const Matrix& m = params.*p.member;
        const auto [r, c] = expected_shape(*this, p.name);
        if (m.rows != r || m.cols != c || m.data.size() != r * c) {
            throw ConfigError(std::string("encoder parameter ") + p.name + " must be " + std::to_string(r) + "x" +
                              std::to_string(c) + ", got " + std::to_string(m.rows) + "x" + std::to_string(m.cols));
        }
        for (double v : m.data) {
            if (!std::isfinite(v)) throw ConfigError(std::string("encoder parameter ") + p.name + " is not finite");
        }
    }
}

EncodeResult encode_mean_pool(const Value& x) {
    if (!x.valid() || x.rows() == 0) throw std::invalid_argument("encode_mean_pool: empty token matrix");
    return {ad::mean_rows(x), std::nullopt};
}

EncodeResult encode_tiny_attention(const Value& x, const EncoderConfig& cfg) {
    if (!x.valid() || x.rows() == 0) throw std::invalid_argument("encode_tiny_attention: empty token matrix");
    if (cfg.kind != Kind::tiny_attention) throw std::invalid_argument("encode_tiny_attention: config is not tiny_attention");
    if (x.cols() != cfg.e) {
        throw std::invalid_argument("encode_tiny_attention: shape mismatch: expected " + std::to_string(cfg.e) +
                                    " columns, got " + std::to_string(x.cols()));
    }
    ad::Graph& g = *x.graph();
    const Value q = ad::matmul(x, as_constant(g, cfg.params.wq));
    const Value k = ad::matmul(x, as_constant(g, cfg.params.wk));
    const Value v = ad::matmul(x, as_constant(g, cfg.params.wv));
    const Value logits = ad::scale(ad::matmul(q, ad::transpose(k)), 1.0 / std::sqrt(static_cast<double>(cfg.e)));
    const Value s = ad::softmax_rows(logits);
    const Value out = ad::matmul(ad::matmul(s, v), as_constant(g, cfg.params.wo));

    const std::size_t d = x.rows();
    std::vector<double> attention(d, 0.0);
    const auto sv = s.data();
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) attention[j] += sv[i * d + j];
    }
    for (double& a : attention) a /= static_cast<double>(d);
    return {ad::mean_rows(out), std::move(attention)};
}

EncodeResult encode(const Value& x, const EncoderConfig& cfg) {
    if (cfg.kind == Kind::mean_pool) return encode_mean_pool(x);
    return encode_tiny_attention(x, cfg);
}

EncoderConfig init_params(Kind kind, std::size_t e, std::size_t h, std::uint64_t seed) {
    EncoderConfig cfg;
    cfg.kind = kind;
    cfg.e = e;
    cfg.h = kind == Kind::mean_pool ? e : h;
    cfg.seed = seed;
    if (kind == Kind::mean_pool) return cfg;
    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(e));
    for (const NamedMatrix& p : kParams) {
        const auto [r, c] = expected_shape(cfg, p.name);
        Matrix m(r, c);
        for (double& v : m.data) v = rng.uniform(-bound, bound);
        cfg.params.*p.member = std::move(m);
    }
    return cfg;
}

void load_params(const std::filesystem::path& path, EncoderConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open encoder parameter file " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("encoder parameter file " + path.string() + ": " + e.what());
    }
    AttentionParams loaded;
    for (const NamedMatrix& p : kParams) {
        if (!doc.contains(p.name)) throw ConfigError(std::string("encoder parameter file lacks ") + p.name);
        const auto& m = doc[p.name];
        try {
            loaded.*p.member = Matrix(m.at("rows").get<std::size_t>(), m.at("cols").get<std::size_t>(),
                                      m.at("data").get<std::vector<double>>());
        } catch (const std::exception& e) {
            throw ConfigError(std::string("encoder parameter ") + p.name + ": " + e.what());
        }
    }
    EncoderConfig candidate = cfg;
    candidate.params = std::move(loaded);
    candidate.validate();
    cfg = std::move(candidate);
}

void save_params(const std::filesystem::path& path, const EncoderConfig& cfg) {
    nlohmann::json doc;
    for (const NamedMatrix& p : kParams) {
        const Matrix& m = cfg.params.*p.member;
        doc[p.name] = {{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << doc.dump() << '\n';
}

}  // namespace gradproj::encoder
