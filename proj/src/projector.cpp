#include "gradproj/projector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gradproj/ad/ops.hpp"
#include "gradproj/errors.hpp"
#include "gradproj/rng.hpp"

namespace gradproj::projector {
namespace {

using ad::Graph;
using ad::Shape;
using ad::Value;

constexpr double kInitScale = 1e-2;
constexpr double kMinP = 1e-12;
constexpr double kSigmaLo = 1e-20;
constexpr double kSigmaHi = 1e20;
constexpr int kCalibrationSteps = 50;
constexpr double kEntropyTol = 1e-5;

Value initial_layout(Graph& g, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> y(n * 2);
    for (double& v : y) v = rng.uniform(-kInitScale, kInitScale);
    return g.constant(y, Shape::matrix(n, 2));
}

Matrix distances(const Matrix& x) {
    Matrix d(x.rows, x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = i + 1; j < x.rows; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < x.cols; ++c) {
                const double diff = x(i, c) - x(j, c);
                s += diff * diff;
            }
            d(i, j) = d(j, i) = std::sqrt(s);
        }
    }
    return d;
}

// Row entropy in bits and probabilities for bandwidth sigma.
double row_entropy(const Matrix& d2, std::size_t i, double sigma, std::vector<double>& p) {
    const std::size_t n = d2.cols;
    const double beta = 1.0 / (2.0 * sigma * sigma);
    double max_logit = -INFINITY;
    for (std::size_t j = 0; j < n; ++j)
        if (j != i) max_logit = std::max(max_logit, -d2(i, j) * beta);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        p[j] = j == i ? 0.0 : std::exp(-d2(i, j) * beta - max_logit);
        z += p[j];
    }
    double h = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        p[j] /= z;
        if (p[j] > 0.0) h -= p[j] * std::log2(p[j]);
    }
    return h;
}

}  // namespace

std::string_view to_string(Kind kind) { return kind == Kind::mds ? "mds" : "tsne"; }

Kind parse_kind(std::string_view text) {
    if (text == "mds") return Kind::mds;
    if (text == "tsne") return Kind::tsne;
    throw ConfigError("unknown projector kind '" + std::string(text) + "'");
}

Matrix to_matrix(const Value& v) {
    const auto d = v.data();
    return Matrix(v.rows(), v.cols(), std::vector<double>(d.begin(), d.end()));
}

double stress(const Matrix& target_dist, const Matrix& layout) {
    const Matrix d = distances(layout);
    double s = 0.0;
    for (std::size_t i = 0; i < d.rows; ++i) {
        for (std::size_t j = i + 1; j < d.rows; ++j) {
            const double r = target_dist(i, j) - d(i, j);
            s += r * r;
        }
    }
    return s;
}

double kl_divergence(const Matrix& p, const Matrix& q) {
    double kl = 0.0;
    for (std::size_t i = 0; i < p.rows; ++i) {
        for (std::size_t j = 0; j < p.cols; ++j) {
            if (i == j || p(i, j) <= 0.0) continue;
            kl += p(i, j) * std::log(p(i, j) / std::max(q(i, j), kMinP));
        }
    }
    return kl;
}

Projection mds_smacof(const Value& embeddings, const ProjectorConfig& cfg) {
    const std::size_t n = embeddings.rows();
    if (n < 2) throw std::invalid_argument("mds_smacof: need at least 2 points, got " + std::to_string(n));
    const std::size_t budget = cfg.pinned_iterations.value_or(cfg.mds.iterations);
    if (budget == 0) throw ConfigError("mds iterations must be >= 1");
    Graph& g = *embeddings.graph();

    const Value delta = ad::sqrt(ad::pairwise_sq_dist(embeddings));
    const Matrix delta_m = to_matrix(delta);
    const Value ones = g.filled(Shape::matrix(1, 2), 1.0);
    const double inv_n = 1.0 / static_cast<double>(n);

    Projection out;
    Value x = initial_layout(g, n, cfg.seed);
    double prev = stress(delta_m, to_matrix(x));
    for (std::size_t t = 0; t < budget; ++t) {
        // Guttman transform: X <- (1/n) B(X) X, B_ij = -delta_ij / d_ij off the
        // diagonal and B_ii = -sum_j B_ij.
        const Value dist = ad::sqrt(ad::pairwise_sq_dist(x));
        const Value b = ad::mul(delta, ad::reciprocal_safe(dist));
        const Value diag_part = ad::mul(ad::matmul(ad::row_sum(b), ones), x);
        x = ad::scale(ad::sub(diag_part, ad::matmul(b, x)), inv_n);

        const double s = stress(delta_m, to_matrix(x));
        out.trace.push_back(s);
        ++out.iterations;
        const bool converged = prev - s < cfg.mds.tol;
        prev = s;
        if (converged && !cfg.pinned_iterations) break;
    }
    out.coords = x;
    return out;
}

double default_perplexity(std::size_t n) {
    return std::min(30.0, static_cast<double>(n - 1) / 3.0);
}

double default_learning_rate(std::size_t n, double early_exaggeration) {
    return std::min(100.0, static_cast<double>(n) / (4.0 * early_exaggeration));
}

Calibration calibrate_perplexity(const Matrix& sq_dist, double target_perplexity) {
    const std::size_t n = sq_dist.rows;
    if (sq_dist.cols != n) throw std::invalid_argument("calibrate_perplexity: distance matrix must be square");
    if (!(target_perplexity >= 1.0) || target_perplexity > static_cast<double>(n - 1)) {
        throw ConfigError("perplexity " + std::to_string(target_perplexity) + " outside [1, " + std::to_string(n - 1) + "]");
    }
    const double target_h = std::log2(target_perplexity);
    Calibration cal{Matrix(n, n), std::vector<double>(n), std::vector<double>(n)};
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) {
        double lo = kSigmaLo, hi = kSigmaHi, sigma = 1.0;
        double h = row_entropy(sq_dist, i, sigma, p);
        for (int step = 0; step < kCalibrationSteps && std::abs(h - target_h) >= kEntropyTol; ++step) {
            // Entropy grows with sigma.
            if (h > target_h) {
                hi = sigma;
            } else {
                lo = sigma;
            }
            sigma = std::sqrt(lo * hi);
            h = row_entropy(sq_dist, i, sigma, p);
        }
        if (!std::isfinite(h) || std::abs(h - target_h) >= kEntropyTol) {
            throw NumericError("calibrate_perplexity: bracket exhausted at row " + std::to_string(i) + " (entropy " +
                               std::to_string(h) + " bits, target " + std::to_string(target_h) + ")");
        }
        std::copy(p.begin(), p.end(), cal.p.row(i).begin());
        cal.sigma[i] = sigma;
        cal.entropy_bits[i] = h;
    }
    return cal;
}

Projection tsne(const Value& embeddings, const ProjectorConfig& cfg) {
    const std::size_t n = embeddings.rows();
    if (n < 4) throw std::invalid_argument("tsne: need at least 4 points, got " + std::to_string(n));
    const TsneOptions& o = cfg.tsne;
    const std::size_t iterations = cfg.pinned_iterations.value_or(o.iterations);
    if (iterations == 0) throw ConfigError("tsne iterations must be >= 1");
    const double perplexity = o.perplexity.value_or(default_perplexity(n));
    const double learning_rate = o.learning_rate.value_or(default_learning_rate(n, o.early_exaggeration));
    if (!(learning_rate > 0.0)) throw ConfigError("tsne learning_rate must be positive");
    Graph& g = *embeddings.graph();
    const Shape nn = Shape::matrix(n, n);

    const Value d2 = ad::pairwise_sq_dist(embeddings);
    Calibration cal;
    if (cfg.pinned_sigmas) {
        if (cfg.pinned_sigmas->size() != n) throw ConfigError("pinned_sigmas must have one entry per document");
        cal.sigma = *cfg.pinned_sigmas;
    } else {
        cal = calibrate_perplexity(to_matrix(d2), perplexity);
    }

    // Conditional P rebuilt on the tape with sigma held constant.
    std::vector<double> beta(n * n), diag_mask(n * n, 0.0), off_mask(n * n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double b = 1.0 / (2.0 * cal.sigma[i] * cal.sigma[i]);
        std::fill_n(beta.begin() + i * n, n, -b);
        diag_mask[i * n + i] = -1e30;
        off_mask[i * n + i] = 0.0;
    }
    const Value p_cond = ad::softmax_rows(ad::add(ad::mul(d2, g.constant(beta, nn)), g.constant(diag_mask, nn)));
    Value p = ad::scale(ad::add(p_cond, ad::transpose(p_cond)), 1.0 / (2.0 * static_cast<double>(n)));
    std::vector<double> lift(n * n);
    const auto pv = p.data();
    for (std::size_t k = 0; k < n * n; ++k) lift[k] = std::max(0.0, kMinP - pv[k]);
    p = ad::add(p, g.constant(lift, nn));
    const Matrix p_m = to_matrix(p);
    const Value p_exaggerated = ad::scale(p, o.early_exaggeration);

    const Value mask = g.constant(off_mask, nn);
    const Value ones_nn = g.filled(nn, 1.0);
    const Value ones_row = g.filled(Shape::matrix(1, 2), 1.0);
    const Value ones_col = g.filled(Shape::matrix(n, 1), 1.0);

    Projection out;
    out.sigmas = cal.sigma;
    out.conditional_p = to_matrix(p_cond);
    out.joint_p = p_m;
    Value y = initial_layout(g, n, cfg.seed);
    Value update = g.filled(Shape::matrix(n, 2), 0.0);
    for (std::size_t t = 0; t < iterations; ++t) {
        const Value& pt = t < o.exaggeration_iterations ? p_exaggerated : p;
        const Value num = ad::mul(ad::reciprocal_safe(ad::add(ad::pairwise_sq_dist(y), ones_nn)), mask);
        const Value q = ad::scalar_mul(ad::reciprocal_safe(ad::total_sum(num)), num);
        const Value w = ad::mul(ad::sub(pt, q), num);
        // dC/dY = 4 (diag(rowsum W) Y - W Y)
        const Value grad = ad::scale(ad::sub(ad::mul(ad::matmul(ad::row_sum(w), ones_row), y), ad::matmul(w, y)), 4.0);
        const double momentum = t < o.momentum_switch ? o.momentum : o.final_momentum;
        update = ad::sub(ad::scale(update, momentum), ad::scale(grad, learning_rate));
        y = ad::add(y, update);
        y = ad::sub(y, ad::matmul(ones_col, ad::mean_rows(y)));

        out.trace.push_back(kl_divergence(p_m, to_matrix(q)));
        ++out.iterations;
    }
    out.coords = y;
    return out;
}

Projection project(const Value& embeddings, const ProjectorConfig& cfg) {
    return cfg.kind == Kind::mds ? mds_smacof(embeddings, cfg) : tsne(embeddings, cfg);
}

}  // namespace gradproj::projector
