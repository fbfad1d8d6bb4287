#pragma once

// Seeded random compositions of engine primitives for gradient checking.
//
// A recipe is generated once against the base inputs (that is where value
// rescaling decisions are made) and then replayed verbatim on perturbed
// inputs, so finite differences never see a control-flow change.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "gradproj/ad/gradcheck.hpp"
#include "gradproj/ad/ops.hpp"
#include "gradproj/rng.hpp"

namespace testsupport {

using gradproj::Rng;
using namespace gradproj::ad;

enum class StepKind {
    add, sub, mul, div, scalar_mul, scale, matmul, matmul_self_t, transpose, row_sum, mean_rows,
    exp, log, pow, sqrt, softmax_rows, pairwise_sq_dist, select_entry, stack, neg, reciprocal_safe,
};

inline constexpr StepKind kAllSteps[] = {
    StepKind::add, StepKind::sub, StepKind::mul, StepKind::div, StepKind::scalar_mul, StepKind::scale,
    StepKind::matmul, StepKind::matmul_self_t, StepKind::transpose, StepKind::row_sum, StepKind::mean_rows,
    StepKind::exp, StepKind::log, StepKind::pow, StepKind::sqrt, StepKind::softmax_rows,
    StepKind::pairwise_sq_dist, StepKind::select_entry, StepKind::stack, StepKind::neg,
    StepKind::reciprocal_safe,
};

struct Step {
    StepKind kind;
    std::size_t a = 0;
    std::size_t b = 0;
    double param = 0.0;
    std::size_t row = 0;
    std::size_t col = 0;
    double rescale = 1.0;  // applied to the step's result when != 1
};

struct Recipe {
    std::vector<LeafInput> leaves;
    std::vector<Step> steps;
    std::vector<double> readout;  // weights for the final weighted sum
};

// x*x + 0.5: strictly positive whatever the perturbation.
inline Value positive(const Value& x) {
    Graph& g = *x.graph();
    return add(mul(x, x), g.filled(x.shape(), 0.5));
}

inline Value apply_step(const Step& s, std::vector<Value>& pool) {
    const Value& a = pool[s.a];
    const Value& b = pool[s.b];
    Value out;
    switch (s.kind) {
        case StepKind::add: out = add(a, b); break;
        case StepKind::sub: out = sub(a, b); break;
        case StepKind::mul: out = mul(a, b); break;
        case StepKind::div: out = div(a, positive(b)); break;
        case StepKind::scalar_mul: out = scalar_mul(select_entry(b, s.row, s.col), a); break;
        case StepKind::scale: out = scale(a, s.param); break;
        case StepKind::matmul: out = matmul(a, b); break;
        case StepKind::matmul_self_t: out = matmul(a, transpose(a)); break;
        case StepKind::transpose: out = transpose(a); break;
        case StepKind::row_sum: out = row_sum(a); break;
        case StepKind::mean_rows: out = mean_rows(a); break;
        case StepKind::exp: out = exp(scale(a, 0.5)); break;
        case StepKind::log: out = log(positive(a)); break;
        case StepKind::pow: out = pow(positive(a), s.param); break;
        case StepKind::sqrt: out = sqrt(positive(a)); break;
        case StepKind::softmax_rows: out = softmax_rows(a); break;
        case StepKind::pairwise_sq_dist: out = pairwise_sq_dist(a); break;
        case StepKind::select_entry: out = select_entry(a, s.row, s.col); break;
        case StepKind::stack: {
            const Value parts[] = {a, b};
            out = stack(parts);
            break;
        }
        case StepKind::neg: out = neg(a); break;
        case StepKind::reciprocal_safe: out = reciprocal_safe(positive(a)); break;
    }
    if (s.rescale != 1.0) out = scale(out, s.rescale);
    return out;
}

inline Value replay(const Recipe& r, Graph& g, std::span<const Value> leaves) {
    std::vector<Value> pool(leaves.begin(), leaves.end());
    for (const Step& s : r.steps) pool.push_back(apply_step(s, pool));
    const Value& last = pool.back();
    const Value w = g.constant(r.readout, last.shape());
    return total_sum(mul(last, w));
}

// Tries to fill in operands for `kind` with first operand `a`; false when the
// pool has no shape-compatible partner.
inline bool pick_operands(StepKind kind, std::size_t a, const std::vector<Value>& pool, Rng& rng, Step& s) {
    const Shape& sa = pool[a].shape();
    s.a = a;
    s.b = a;
    std::vector<std::size_t> candidates;
    auto collect = [&](auto pred) {
        candidates.clear();
        for (std::size_t i = 0; i < pool.size(); ++i)
            if (pred(pool[i].shape())) candidates.push_back(i);
        if (candidates.empty()) return false;
        s.b = candidates[rng.below(candidates.size())];
        return true;
    };
    switch (kind) {
        case StepKind::add:
        case StepKind::sub:
        case StepKind::mul:
        case StepKind::div:
            return collect([&](const Shape& sb) { return sb.same_dims(sa); });
        case StepKind::matmul:
            return collect([&](const Shape& sb) { return sb.rows == sa.cols; });
        case StepKind::stack:
            return collect([&](const Shape& sb) { return sb.cols == sa.cols; });
        case StepKind::scalar_mul: {
            s.b = rng.below(pool.size());
            const Shape& sb = pool[s.b].shape();
            s.row = rng.below(sb.rows);
            s.col = rng.below(sb.cols);
            return true;
        }
        case StepKind::select_entry:
            s.row = rng.below(sa.rows);
            s.col = rng.below(sa.cols);
            return true;
        case StepKind::pow:
            s.param = std::vector<double>{-1.5, -1.0, 0.5, 2.0, 3.0}[rng.below(5)];
            return true;
        case StepKind::scale:
            s.param = rng.uniform(-1.5, 1.5);
            return true;
        default:
            return true;
    }
}

// Builds a recipe with `depth` primitive steps over three leaves with entries
// in [-2, 2]. `forced` (when given) is used for the first step.
inline Recipe make_recipe(std::uint64_t seed, std::size_t depth, const StepKind* forced = nullptr) {
    Rng rng(seed);
    Recipe r;
    const Shape shapes[] = {Shape::matrix(3, 2), Shape::matrix(2, 3), Shape::vector(3)};
    for (const Shape& sh : shapes) {
        LeafInput in{sh, std::vector<double>(sh.size())};
        for (double& x : in.values) x = rng.uniform(-2.0, 2.0);
        r.leaves.push_back(in);
    }

    Graph g;
    std::vector<Value> pool;
    for (const LeafInput& in : r.leaves) pool.push_back(g.leaf(in.values, in.shape));

    while (r.steps.size() < depth) {
        const StepKind kind = (forced != nullptr && r.steps.empty())
                                  ? *forced
                                  : kAllSteps[rng.below(std::size(kAllSteps))];
        // Prefer recent values so the composition actually nests.
        const std::size_t lo = pool.size() > 3 ? pool.size() - 3 : 0;
        const std::size_t a = lo + rng.below(pool.size() - lo);
        Step s{kind};
        if (!pick_operands(kind, a, pool, rng, s)) continue;
        Value v = apply_step(s, pool);
        double peak = 0.0;
        for (double x : v.data()) peak = std::max(peak, std::abs(x));
        if (peak > 3.0) {
            s.rescale = 3.0 / peak;
            v = scale(v, s.rescale);
        }
        r.steps.push_back(s);
        pool.push_back(v);
    }

    const Shape& last = pool.back().shape();
    r.readout.resize(last.size());
    for (double& w : r.readout) w = rng.uniform(0.5, 1.5);
    return r;
}

}  // namespace testsupport
