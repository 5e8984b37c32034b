#pragma once

#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "thb/bspline.hpp"
#include "thb/types.hpp"

namespace thb {

using CellSet = std::unordered_set<Index2, Index2Hash>;
template <typename T>
using Index2Map = std::unordered_map<Index2, T, Index2Hash>;

/// Nested hierarchy of dyadically refined tensor spaces V^0 c ... c V^{M-1}
/// with one set of active cells per level. The active cells of all levels
/// partition the domain; the subdomain of level l is
/// Omega^l = union of active cells of levels >= l, with Omega^0 the whole
/// domain and Omega^M empty. Each Omega^{l+1} is a union of level-l cells
/// because refinement always replaces whole active cells by their four
/// children.
///
/// Construction and refinement are single-writer; all queries on a built
/// mesh are const and safe for concurrent use.
class HierarchicalMesh {
public:
    explicit HierarchicalMesh(TensorSpace root);

    int num_levels() const { return int(spaces_.size()); }
    const TensorSpace& space(int level) const { return spaces_[level]; }
    const CellSet& active_cells(int level) const { return active_[level]; }
    std::vector<Index2> sorted_active_cells(int level) const;
    long total_active_cells() const;

    bool is_active(int level, Index2 cell) const {
        return active_[level].count(cell) > 0;
    }

    /// Is the level-`cell_level` cell contained in Omega^`domain_level`?
    /// Requires domain_level <= cell_level + 1; domain_level == num_levels
    /// means the empty domain.
    bool cell_in_domain(int cell_level, Index2 cell, int domain_level) const;

    /// supp(B_J) subset of Omega^`domain_level` (support clipped to the
    /// domain; periodic direction wrapped).
    bool support_in_domain(int level, Index2 J, int domain_level) const;

    /// Does supp(B_J) share at least one full level-`level` cell with
    /// Omega^`domain_level`? (Edge contact does not count.)
    bool support_meets_domain(int level, Index2 J, int domain_level) const;

    /// New mesh with every marked cell replaced by its four children.
    /// Appends a level when cells of the finest level are marked. Throws
    /// std::invalid_argument if a marked cell is not currently active.
    HierarchicalMesh refined(std::span<const CellRef> marked) const;

private:
    std::vector<TensorSpace> spaces_;
    std::vector<CellSet> active_;
    // domain_[l]: level-l cells contained in Omega^l
    std::vector<CellSet> domain_;
};

/// Per level, the indices J with supp(B_J^l) inside Omega^l but not inside
/// Omega^{l+1}; sorted for deterministic iteration.
struct ActiveIndexSet {
    std::vector<std::vector<Index2>> per_level;

    long total() const {
        long n = 0;
        for (const auto& v : per_level) n += long(v.size());
        return n;
    }
    bool contains(const LevelIndex& f) const;
};

ActiveIndexSet compute_active_indices(const HierarchicalMesh& mesh);

/// A truncated hierarchical B-spline: the mother function with all of its
/// fine-level content over refined regions removed. Stored as sparse
/// per-level coefficient maps, T(x) = sum_l sum_K coeff[l][K] B_K^l(x);
/// coefficients whose support does not reach into the next finer subdomain
/// settle at their level, the rest are pushed down by the two-scale
/// relation and filtered.
struct ThbFunction {
    LevelIndex mother;
    /// levels[k] holds the coefficients at level mother.level + k.
    std::vector<Index2Map<double>> levels;
};

/// Cumulative truncation of the mother B-spline with respect to all finer
/// levels of the mesh. Trunc is the identity on the finest level.
ThbFunction truncate(const HierarchicalMesh& mesh, LevelIndex mother);

/// Evaluate a truncated basis function. Cost depends only on the number of
/// levels, not on the total basis size.
double eval_thb(const HierarchicalMesh& mesh, const ThbFunction& f, Vec2 x);

}  // namespace thb
