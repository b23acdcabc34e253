#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "walsh/measure.hpp"
#include "walsh/simulate.hpp"

// Iterated-barycenter embedding: each refinement level splits every interval
// at its barycenter, and the stopping time is the corresponding sequence of
// two-sided exits after a first hit of the per-ray mean. The stopped law and
// expected stopping time at every finite depth are closed-form.

namespace walsh {

inline constexpr int kMaxRefineDepth = 40;

struct RefinementTree {
    struct Node {
        double lo, hi;  // interval [lo, hi), hi may be +inf
        double mass;
        double bary;
        int left = -1, right = -1;
    };
    struct RayTree {
        std::vector<Node> nodes;              // node 0 is [0, inf)
        std::vector<std::vector<int>> levels;  // levels[l] has 2^l node indices, ordered by lo
    };
    std::vector<RayTree> rays;
    int depth = 0;

    // Level point set: interval left endpoints plus +inf, ties kept.
    std::vector<double> level_points(std::size_t ray, int level) const {
        std::vector<double> pts;
        for (int idx : rays[ray].levels[static_cast<std::size_t>(level)]) pts.push_back(rays[ray].nodes[static_cast<std::size_t>(idx)].lo);
        pts.push_back(std::numeric_limits<double>::infinity());
        return pts;
    }
};

namespace detail {

inline void split_node(const RadialMeasure& radial, RefinementTree::RayTree& tree, int idx) {
    auto& nodes = tree.nodes;
    const double lo = nodes[static_cast<std::size_t>(idx)].lo;
    const double hi = nodes[static_cast<std::size_t>(idx)].hi;
    const double b = nodes[static_cast<std::size_t>(idx)].bary;
    auto make = [&](double a, double c) {
        RefinementTree::Node n;
        n.lo = a;
        n.hi = c;
        // collapsed intervals carry no mass and keep the left endpoint
        n.mass = c > a ? radial.mass(a, c) : 0.0;
        n.bary = c > a ? interval_barycenter(radial, a, c) : a;
        nodes.push_back(n);
        return static_cast<int>(nodes.size()) - 1;
    };
    const int l = make(lo, b);
    const int r = make(b, hi);
    nodes[static_cast<std::size_t>(idx)].left = l;
    nodes[static_cast<std::size_t>(idx)].right = r;
}

}  // namespace detail

inline RefinementTree refine(const TargetMeasure& target, int depth) {
    if (depth < 1) throw std::invalid_argument("refinement depth must be >= 1");
    if (depth > kMaxRefineDepth) throw std::invalid_argument("refinement depth too large");
    RefinementTree tree;
    tree.depth = depth;
    tree.rays.resize(target.ray_count());
    for (std::size_t g = 0; g < target.ray_count(); ++g) {
        const RadialMeasure& radial = target.ray(g).radial;
        auto& rt = tree.rays[g];
        RefinementTree::Node root;
        root.lo = 0.0;
        root.hi = std::numeric_limits<double>::infinity();
        root.mass = 1.0;
        root.bary = radial.mean();
        rt.nodes.push_back(root);
        rt.levels.push_back({0});
        for (int l = 0; l < depth; ++l) {
            std::vector<int> next;
            next.reserve(rt.levels.back().size() * 2);
            for (int idx : rt.levels.back()) {
                detail::split_node(radial, rt, idx);
                next.push_back(rt.nodes[static_cast<std::size_t>(idx)].left);
                next.push_back(rt.nodes[static_cast<std::size_t>(idx)].right);
            }
            rt.levels.push_back(std::move(next));
        }
    }
    return tree;
}

struct DubinsLaw {
    struct RayLaw {
        std::vector<double> radius;
        std::vector<double> prob;
    };
    std::vector<double> ray_pmf;
    std::vector<RayLaw> rays;
    double expected_tau = 0.0;
};

// Exact law of the stage-`depth` stop and its expected time: the stopped law
// on each ray is the barycenter discretization over the level depth-1
// intervals, and E[tau] is the weighted sum of mass * barycenter^2.
inline DubinsLaw analytic_law(const TargetMeasure& target, int depth) {
    const RefinementTree tree = refine(target, depth);
    DubinsLaw law;
    law.rays.resize(target.ray_count());
    for (std::size_t g = 0; g < target.ray_count(); ++g) {
        const double w = target.ray(g).weight;
        law.ray_pmf.push_back(w);
        double e = 0.0;
        for (int idx : tree.rays[g].levels[static_cast<std::size_t>(depth - 1)]) {
            const auto& nd = tree.rays[g].nodes[static_cast<std::size_t>(idx)];
            if (nd.mass <= 0.0) continue;
            law.rays[g].radius.push_back(nd.bary);
            law.rays[g].prob.push_back(nd.mass);
            e += nd.mass * nd.bary * nd.bary;
        }
        law.expected_tau += w * e;
    }
    return law;
}

// Discretization of a single radial measure at the given depth (masses on the
// level depth-1 interval barycenters). Depth 1 collapses to the mean.
inline RadialMeasure refined_measure(const RadialMeasure& radial, int depth) {
    if (depth < 1) throw std::invalid_argument("refinement depth must be >= 1");
    TargetMeasure one(std::vector<TargetMeasure::Ray>{{"_", 1.0, radial}});
    const RefinementTree tree = refine(one, depth);
    std::vector<RadialAtom> atoms;
    for (int idx : tree.rays[0].levels[static_cast<std::size_t>(depth - 1)]) {
        const auto& nd = tree.rays[0].nodes[static_cast<std::size_t>(idx)];
        if (nd.mass > 0.0) atoms.push_back({nd.bary, nd.mass});
    }
    return RadialMeasure(std::move(atoms), {});
}

// Materializes the construction as an executable rule. Requires a centered
// spinning measure; rays are indexed in target order.
inline StoppingRule dubins_rule(const TargetMeasure& target, const SpinningMeasure& kappa, int depth,
                                double centering_tol = kCenteredTol) {
    if (!is_centered(target, kappa, centering_tol))
        throw std::domain_error("dubins_rule requires the centered spinning measure");
    const RefinementTree tree = refine(target, depth);
    DubinsScheduleRule rule;
    rule.depth = depth;
    rule.rays.resize(target.ray_count());
    for (std::size_t g = 0; g < target.ray_count(); ++g) {
        const auto& nodes = tree.rays[g].nodes;
        auto& out = rule.rays[g];
        out.resize(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) out[i] = {nodes[i].bary, nodes[i].left, nodes[i].right};
    }
    return rule;
}

}  // namespace walsh
