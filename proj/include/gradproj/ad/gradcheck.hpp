#pragma once

// Central finite-difference verification of backward() adjoints.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "gradproj/ad/graph.hpp"

namespace gradproj::ad {

struct LeafInput {
    Shape shape;
    std::vector<double> values;
};

// Rebuilds the same scalar-valued computation from freshly created leaves.
// Called once per evaluation, so it must be deterministic.
using GraphBuilder = std::function<Value(Graph&, std::span<const Value> leaves)>;

struct GradCheckEntry {
    std::size_t leaf = 0;
    std::size_t coord = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t failures = 0;  // entries with rel_error >= tol
    std::vector<GradCheckEntry> entries;

    bool passed() const { return failures == 0; }
};

// Compares every leaf coordinate's adjoint against (f(x+h) - f(x-h)) / (2h),
// using |a - fd| / (|fd| + 1e-8) as the relative error. Failures are reported,
// never thrown.
GradCheckReport check_gradients(const GraphBuilder& build, std::span<const LeafInput> leaves, double h, double tol);

}  // namespace gradproj::ad
