#pragma once

// Differentiable dimensionality reduction from n x h embeddings to n x 2
// coordinates. Every iteration is recorded on the embeddings' graph, so the
// tape runs from the projected points back to the word inputs.

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "gradproj/ad/graph.hpp"
#include "gradproj/matrix.hpp"

namespace gradproj::projector {

enum class Kind { mds, tsne };

std::string_view to_string(Kind kind);
Kind parse_kind(std::string_view text);

struct MdsOptions {
    std::size_t iterations = 300;
    double tol = 1e-9;
};

struct TsneOptions {
    std::optional<double> perplexity;  // default min(30, (n - 1) / 3)
    std::size_t iterations = 250;
    double early_exaggeration = 4.0;
    std::size_t exaggeration_iterations = 50;
    // Default min(100, n / (4 * early_exaggeration)). Without gains, larger
    // steps make the exaggerated phase oscillate on small corpora.
    std::optional<double> learning_rate;
    double momentum = 0.5;
    double final_momentum = 0.8;
    std::size_t momentum_switch = 100;
};

struct ProjectorConfig {
    Kind kind = Kind::mds;
    std::uint64_t seed = 0;
    MdsOptions mds;
    TsneOptions tsne;
    // Runs exactly this many iterations and disables early stopping. Used to
    // rerun a projection with the control flow of an earlier one.
    std::optional<std::size_t> pinned_iterations;
    // t-SNE bandwidths to use instead of calibrating. The tape treats sigma as
    // a constant, so finite-difference reruns must hold it fixed as well.
    std::optional<std::vector<double>> pinned_sigmas;
};

struct Projection {
    ad::Value coords;            // n x 2
    std::vector<double> trace;   // stress (mds) or KL divergence (tsne), one per iteration
    std::size_t iterations = 0;  // executed
    std::vector<double> sigmas;  // tsne bandwidths
    Matrix conditional_p;        // tsne: row-conditional P as computed on the graph
    Matrix joint_p;              // tsne: symmetrized, clamped P
};

// SMACOF with unit weights. The initial layout is a seeded constant, uniform in
// [-1e-2, 1e-2]^2.
Projection mds_smacof(const ad::Value& embeddings, const ProjectorConfig& cfg);

Projection tsne(const ad::Value& embeddings, const ProjectorConfig& cfg);

Projection project(const ad::Value& embeddings, const ProjectorConfig& cfg);

double default_perplexity(std::size_t n);
double default_learning_rate(std::size_t n, double early_exaggeration);

struct Calibration {
    Matrix p;                   // conditional rows, zero diagonal
    std::vector<double> sigma;  // per-row Gaussian bandwidth
    std::vector<double> entropy_bits;
};

// Per row, bisects sigma geometrically over [1e-20, 1e20] (at most 50 steps)
// until the row's entropy is within 1e-5 bits of log2(target).
Calibration calibrate_perplexity(const Matrix& sq_dist, double target_perplexity);

// Sum over i < j of (delta_ij - d_ij)^2, d taken between rows of `layout`.
double stress(const Matrix& target_dist, const Matrix& layout);

// Sum over i != j of p log(p / max(q, 1e-12)).
double kl_divergence(const Matrix& p, const Matrix& q);

Matrix to_matrix(const ad::Value& v);

}  // namespace gradproj::projector
