#pragma once

#include "esfem/mesh.hpp"
#include "esfem/presets.hpp"
#include "esfem/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace esfem::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

/// Unit square on an n x n grid with interior nodes jittered by up to `jitter` cell widths.
inline TriMesh jittered_square(int n, double jitter, Rng& rng) {
    std::vector<double> xs(n + 1);
    for (int i = 0; i <= n; ++i) xs[i] = static_cast<double>(i) / n;
    auto base = structured_rectangle(
        xs, xs,
        {{"left", [](const Vec2& p) { return p.x() < 1e-12; }},
         {"right", [](const Vec2& p) { return p.x() > 1 - 1e-12; }},
         {"bottom", [](const Vec2& p) { return p.y() < 1e-12; }},
         {"top", [](const Vec2& p) { return p.y() > 1 - 1e-12; }}});
    MeshData d = base.data();
    const auto boundary = base.boundary_nodes();
    const double h = 1.0 / n;
    for (std::size_t i = 0; i < d.nodes.size(); ++i) {
        if (boundary[i]) continue;
        d.nodes[i].X += Vec2(uniform(rng, -jitter, jitter), uniform(rng, -jitter, jitter)) * h;
    }
    return TriMesh(std::move(d));
}

/// Jittered square refined around random elements: unstructured, multi-level.
inline TriMesh random_mesh(Rng& rng, int max_level = 4) {
    const int n = std::uniform_int_distribution<int>(2, 6)(rng);
    TriMesh mesh = jittered_square(n, 0.2, rng);
    const int rounds = std::uniform_int_distribution<int>(0, max_level)(rng);
    for (int r = 0; r < rounds; ++r) {
        std::vector<int> marked;
        for (int e = 0; e < mesh.num_elements(); ++e) {
            if (uniform(rng, 0, 1) < 0.3) marked.push_back(e);
        }
        mesh = refine(mesh, marked, max_level).mesh;
    }
    return mesh;
}

/// Length of edges with a single support.
inline double boundary_length(const TriMesh& mesh) {
    double len = 0.0;
    for (const auto& e : mesh.edges()) {
        if (e.is_boundary()) len += (mesh.nodes()[e.nodes[0]].X - mesh.nodes()[e.nodes[1]].X).norm();
    }
    return len;
}

inline double rel_err(double a, double b, double floor = 1e-300) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Gradient of `node` over a smoothing domain from the boundary integral
/// (1/A) sum over sub-triangles (a, b, centroid) of the closed line integral of N n.
/// `area` receives A from the sub-triangles.
inline Vec2 boundary_integral_gradient(const TriMesh& mesh, const SmoothingDomain& d, int node, double& area) {
    const auto& edge = mesh.edges()[d.edge];
    Vec2 acc = Vec2::Zero();
    area = 0.0;
    for (int s = 0; s < edge.support_count; ++s) {
        const auto& el = mesh.elements()[edge.support[s]];
        const Vec2 v[3] = {mesh.nodes()[el.nodes[0]].X, mesh.nodes()[el.nodes[1]].X, mesh.nodes()[el.nodes[2]].X};
        const Vec2 centroid = (v[0] + v[1] + v[2]) / 3.0;
        // Linear shape function of `node` inside this element (zero if not a vertex).
        auto N = [&](const Vec2& p) {
            for (int i = 0; i < 3; ++i) {
                if (el.nodes[i] != node) continue;
                const Vec2& b = v[(i + 1) % 3];
                const Vec2& c = v[(i + 2) % 3];
                return signed_area(p, b, c) / signed_area(v[i], b, c);
            }
            return 0.0;
        };
        Vec2 a = mesh.nodes()[edge.nodes[0]].X, b = mesh.nodes()[edge.nodes[1]].X;
        if (signed_area(a, b, centroid) < 0) std::swap(a, b);
        const Vec2 poly[3] = {a, b, centroid};
        area += signed_area(a, b, centroid);
        for (int i = 0; i < 3; ++i) {
            const Vec2 p = poly[i], q = poly[(i + 1) % 3];
            const Vec2 t = q - p;
            const Vec2 n_len(t.y(), -t.x());  // outward normal times segment length
            acc += N(0.5 * (p + q)) * n_len;  // midpoint rule is exact for linear N
        }
    }
    return acc / area;
}

}  // namespace esfem::testing
