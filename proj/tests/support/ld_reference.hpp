#pragma once

// Long-double re-implementation of the composite recipes' forward pass, used
// as a finite-difference oracle with a roundoff floor far below double's.
// Shares no arithmetic with the engine.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "support/random_composite.hpp"

namespace testsupport {

struct LdMat {
    std::size_t rows = 0, cols = 0;
    std::vector<long double> v;

    LdMat() = default;
    LdMat(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0L) {}
    long double& operator()(std::size_t i, std::size_t j) { return v[i * cols + j]; }
    long double operator()(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
};

template <typename F>
LdMat ld_map(const LdMat& a, F f) {
    LdMat out = a;
    for (long double& x : out.v) x = f(x);
    return out;
}

template <typename F>
LdMat ld_zip(const LdMat& a, const LdMat& b, F f) {
    LdMat out = a;
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = f(a.v[i], b.v[i]);
    return out;
}

inline LdMat ld_positive(const LdMat& a) {
    return ld_map(a, [](long double x) { return x * x + 0.5L; });
}

inline LdMat ld_matmul(const LdMat& a, const LdMat& b) {
    LdMat out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.cols; ++j) {
            long double s = 0.0L;
            for (std::size_t k = 0; k < a.cols; ++k) s += a(i, k) * b(k, j);
            out(i, j) = s;
        }
    return out;
}

inline LdMat ld_transpose(const LdMat& a) {
    LdMat out(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
    return out;
}

inline LdMat ld_apply(const Step& s, const std::vector<LdMat>& pool) {
    const LdMat& a = pool[s.a];
    const LdMat& b = pool[s.b];
    LdMat out;
    switch (s.kind) {
        case StepKind::add: out = ld_zip(a, b, [](long double x, long double y) { return x + y; }); break;
        case StepKind::sub: out = ld_zip(a, b, [](long double x, long double y) { return x - y; }); break;
        case StepKind::mul: out = ld_zip(a, b, [](long double x, long double y) { return x * y; }); break;
        case StepKind::div:
            out = ld_zip(a, ld_positive(b), [](long double x, long double y) { return x / y; });
            break;
        case StepKind::scalar_mul: {
            const long double k = b(s.row, s.col);
            out = ld_map(a, [k](long double x) { return k * x; });
            break;
        }
        case StepKind::scale: {
            const long double k = s.param;
            out = ld_map(a, [k](long double x) { return k * x; });
            break;
        }
        case StepKind::matmul: out = ld_matmul(a, b); break;
        case StepKind::matmul_self_t: out = ld_matmul(a, ld_transpose(a)); break;
        case StepKind::transpose: out = ld_transpose(a); break;
        case StepKind::row_sum:
            out = LdMat(a.rows, 1);
            for (std::size_t i = 0; i < a.rows; ++i)
                for (std::size_t j = 0; j < a.cols; ++j) out(i, 0) += a(i, j);
            break;
        case StepKind::mean_rows:
            out = LdMat(1, a.cols);
            for (std::size_t j = 0; j < a.cols; ++j) {
                for (std::size_t i = 0; i < a.rows; ++i) out(0, j) += a(i, j);
                out(0, j) /= static_cast<long double>(a.rows);
            }
            break;
        case StepKind::exp: out = ld_map(a, [](long double x) { return std::exp(0.5L * x); }); break;
        case StepKind::log: out = ld_map(ld_positive(a), [](long double x) { return std::log(x); }); break;
        case StepKind::pow: {
            const long double p = s.param;
            out = ld_map(ld_positive(a), [p](long double x) { return std::pow(x, p); });
            break;
        }
        case StepKind::sqrt: out = ld_map(ld_positive(a), [](long double x) { return std::sqrt(x); }); break;
        case StepKind::softmax_rows:
            out = a;
            for (std::size_t i = 0; i < a.rows; ++i) {
                long double m = a(i, 0), z = 0.0L;
                for (std::size_t j = 1; j < a.cols; ++j) m = std::max(m, a(i, j));
                for (std::size_t j = 0; j < a.cols; ++j) z += std::exp(a(i, j) - m);
                for (std::size_t j = 0; j < a.cols; ++j) out(i, j) = std::exp(a(i, j) - m) / z;
            }
            break;
        case StepKind::pairwise_sq_dist:
            out = LdMat(a.rows, a.rows);
            for (std::size_t i = 0; i < a.rows; ++i)
                for (std::size_t j = 0; j < a.rows; ++j)
                    for (std::size_t k = 0; k < a.cols; ++k) out(i, j) += (a(i, k) - a(j, k)) * (a(i, k) - a(j, k));
            break;
        case StepKind::select_entry:
            out = LdMat(1, 1);
            out(0, 0) = a(s.row, s.col);
            break;
        case StepKind::stack:
            out = LdMat(a.rows + b.rows, a.cols);
            std::copy(a.v.begin(), a.v.end(), out.v.begin());
            std::copy(b.v.begin(), b.v.end(), out.v.begin() + static_cast<std::ptrdiff_t>(a.v.size()));
            break;
        case StepKind::neg: out = ld_map(a, [](long double x) { return -x; }); break;
        case StepKind::reciprocal_safe:
            out = ld_map(ld_positive(a), [](long double x) { return std::fabs(x) <= 1e-12L ? 0.0L : 1.0L / x; });
            break;
    }
    if (s.rescale != 1.0) {
        const long double k = s.rescale;
        out = ld_map(out, [k](long double x) { return k * x; });
    }
    return out;
}

// Recipe output for the given leaf values, in long double.
inline long double ld_replay(const Recipe& r, const std::vector<std::vector<long double>>& leaves) {
    std::vector<LdMat> pool;
    for (std::size_t l = 0; l < r.leaves.size(); ++l) {
        LdMat m(r.leaves[l].shape.rows, r.leaves[l].shape.cols);
        m.v = leaves[l];
        pool.push_back(std::move(m));
    }
    for (const Step& s : r.steps) pool.push_back(ld_apply(s, pool));
    long double total = 0.0L;
    const LdMat& last = pool.back();
    for (std::size_t i = 0; i < last.v.size(); ++i) total += last.v[i] * static_cast<long double>(r.readout[i]);
    return total;
}

struct LdCheck {
    double max_rel_error = 0.0;
    double max_forward_error = 0.0;  // |engine f - long double f| / max(1, |f|)
};

// Engine adjoints against long-double central differences, with the same
// relative error as check_gradients: |a - fd| / (|fd| + 1e-8).
inline LdCheck ld_gradient_check(const Recipe& r, long double h = 1e-6L) {
    LdCheck out;
    Graph g;
    std::vector<Value> handles;
    for (const LeafInput& in : r.leaves) handles.push_back(g.leaf(in.values, in.shape));
    const Value f = replay(r, g, handles);
    const GradientMap grads = g.backward(f);

    std::vector<std::vector<long double>> x;
    for (const LeafInput& in : r.leaves) x.emplace_back(in.values.begin(), in.values.end());
    const long double f0 = ld_replay(r, x);
    out.max_forward_error =
        static_cast<double>(std::fabs(static_cast<long double>(f.item()) - f0) / std::max(1.0L, std::fabs(f0)));

    for (std::size_t l = 0; l < x.size(); ++l) {
        const auto adj = grads[handles[l]];
        for (std::size_t c = 0; c < x[l].size(); ++c) {
            const long double x0 = x[l][c];
            x[l][c] = x0 + h;
            const long double up = ld_replay(r, x);
            x[l][c] = x0 - h;
            const long double down = ld_replay(r, x);
            x[l][c] = x0;
            const double fd = static_cast<double>((up - down) / (2.0L * h));
            const double rel = std::abs(adj[c] - fd) / (std::abs(fd) + 1e-8);
            out.max_rel_error = std::max(out.max_rel_error, rel);
        }
    }
    return out;
}

}  // namespace testsupport
