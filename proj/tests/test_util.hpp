#pragma once

#include <random>
#include <vector>

#include "thb/bspline.hpp"
#include "thb/hierarchy.hpp"
#include "thb/types.hpp"

namespace thb::testutil {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline Vec2 random_point(std::mt19937_64& g, const Box2& box) {
    return {uniform(g, box.u0, box.u1), uniform(g, box.v0, box.v1)};
}

/// Strictly interior random point (keeps clamped-boundary special cases out
/// of generic property tests).
inline Vec2 random_interior_point(std::mt19937_64& g, const Box2& box) {
    const double eu = 1e-9 * box.width(), ev = 1e-9 * box.height();
    return {uniform(g, box.u0 + eu, box.u1 - eu), uniform(g, box.v0 + ev, box.v1 - ev)};
}

/// Mesh with `rounds` nested refinements of the lower-left quadrant block
/// of whatever is currently active; produces rounds + 1 levels.
inline HierarchicalMesh nested_corner_mesh(TensorSpace root, int rounds) {
    HierarchicalMesh mesh(std::move(root));
    for (int r = 0; r < rounds; ++r) {
        const int level = mesh.num_levels() - 1;
        const int nu = mesh.space(level).u().cells();
        const int nv = mesh.space(level).v().cells();
        std::vector<CellRef> marks;
        for (int i = 0; i < nu; ++i)
            for (int j = 0; j < nv; ++j)
                if (i <= (nu - 1) / 2 + 1 && j <= (nv - 1) / 2 + 1 &&
                    mesh.is_active(level, {i, j}))
                    marks.push_back({level, {i, j}});
        if (marks.empty()) break;
        mesh = mesh.refined(marks);
    }
    return mesh;
}

/// Mesh refined `rounds` times inside a random rectangle of active cells of
/// the current finest level (falls back to single cells when needed).
inline HierarchicalMesh random_mesh(std::mt19937_64& g, TensorSpace root, int rounds) {
    HierarchicalMesh mesh(std::move(root));
    for (int r = 0; r < rounds; ++r) {
        const int level = mesh.num_levels() - 1;
        const auto active = mesh.sorted_active_cells(level);
        if (active.empty()) break;
        std::uniform_int_distribution<std::size_t> pick(0, active.size() - 1);
        const Index2 c0 = active[pick(g)];
        const int extent = 1 + int(g() % 3);
        std::vector<CellRef> marks;
        for (const Index2& c : active)
            if (std::abs(c.i - c0.i) <= extent && std::abs(c.j - c0.j) <= extent)
                marks.push_back({level, c});
        mesh = mesh.refined(marks);
    }
    return mesh;
}

}  // namespace thb::testutil
