#include "gradproj/ad/gradcheck.hpp"

#include <cmath>

namespace gradproj::ad {
namespace {

double evaluate(const GraphBuilder& build, std::span<const LeafInput> leaves, Recording mode) {
    Graph g(mode);
    std::vector<Value> handles;
    handles.reserve(leaves.size());
    for (const LeafInput& in : leaves) handles.push_back(g.leaf(in.values, in.shape));
    return build(g, handles).item();
}

}  // namespace

GradCheckReport check_gradients(const GraphBuilder& build, std::span<const LeafInput> leaves, double h, double tol) {
    GradCheckReport report;

    std::vector<std::vector<double>> analytic;
    {
        Graph g;
        std::vector<Value> handles;
        for (const LeafInput& in : leaves) handles.push_back(g.leaf(in.values, in.shape));
        const Value out = build(g, handles);
        const GradientMap grads = g.backward(out);
        for (const Value& leaf : handles) {
            const auto adj = grads[leaf];
            analytic.emplace_back(adj.begin(), adj.end());
        }
    }

    std::vector<LeafInput> perturbed(leaves.begin(), leaves.end());
    for (std::size_t l = 0; l < leaves.size(); ++l) {
        for (std::size_t c = 0; c < leaves[l].values.size(); ++c) {
            const double x = leaves[l].values[c];
            auto at = [&](double offset) {
                perturbed[l].values[c] = x + offset;
                const double f = evaluate(build, perturbed, Recording::disabled);
                perturbed[l].values[c] = x;
                return f;
            };
            const double up = at(h);
            const double numeric = (up - at(-h)) / (2.0 * h);

            GradCheckEntry entry;
            entry.leaf = l;
            entry.coord = c;
            entry.analytic = analytic[l][c];
            entry.numeric = numeric;
            entry.rel_error = std::abs(entry.analytic - entry.numeric) / (std::abs(entry.numeric) + 1e-8);
            report.max_rel_error = std::max(report.max_rel_error, entry.rel_error);
            if (!(entry.rel_error < tol)) ++report.failures;
            report.entries.push_back(entry);
        }
    }
    return report;
}

}  // namespace gradproj::ad
