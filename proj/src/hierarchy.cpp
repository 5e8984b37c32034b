#include "thb/hierarchy.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace thb {

HierarchicalMesh::HierarchicalMesh(TensorSpace root) {
    const int nu = root.u().cells();
    const int nv = root.v().cells();
    CellSet all;
    all.reserve(std::size_t(nu) * nv);
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) all.insert({i, j});
    spaces_.push_back(std::move(root));
    active_.push_back(all);
    domain_.push_back(std::move(all));
}

std::vector<Index2> HierarchicalMesh::sorted_active_cells(int level) const {
    std::vector<Index2> cells(active_[level].begin(), active_[level].end());
    std::sort(cells.begin(), cells.end());
    return cells;
}

long HierarchicalMesh::total_active_cells() const {
    long n = 0;
    for (const auto& s : active_) n += long(s.size());
    return n;
}

bool HierarchicalMesh::cell_in_domain(int cell_level, Index2 cell, int domain_level) const {
    if (domain_level <= 0) return true;
    if (domain_level >= num_levels() + 1) return false;  // Omega^M is empty
    if (domain_level <= cell_level) {
        // ancestor at domain_level must lie in D^{domain_level}
        const int shift = cell_level - domain_level;
        const Index2 anc{cell.i >> shift, cell.j >> shift};
        return domain_[domain_level].count(anc) > 0;
    }
    // domain_level == cell_level + 1: Omega^{l+1} is a union of level-l
    // cells, namely those in D^l that are no longer active
    if (domain_level != cell_level + 1)
        throw std::logic_error("cell_in_domain: unsupported domain level");
    return domain_[cell_level].count(cell) > 0 && active_[cell_level].count(cell) == 0;
}

bool HierarchicalMesh::support_in_domain(int level, Index2 J, int domain_level) const {
    const TensorSpace& sp = space(level);
    IndexSpan su, sv;
    sp.support_spans(J, su, sv);
    for (int i = su.lo; i <= su.hi; ++i)
        for (int j = sv.lo; j <= sv.hi; ++j)
            if (!cell_in_domain(level, {sp.u().wrap_index(i), j}, domain_level))
                return false;
    return true;
}

bool HierarchicalMesh::support_meets_domain(int level, Index2 J, int domain_level) const {
    const TensorSpace& sp = space(level);
    IndexSpan su, sv;
    sp.support_spans(J, su, sv);
    for (int i = su.lo; i <= su.hi; ++i)
        for (int j = sv.lo; j <= sv.hi; ++j)
            if (cell_in_domain(level, {sp.u().wrap_index(i), j}, domain_level))
                return true;
    return false;
}

HierarchicalMesh HierarchicalMesh::refined(std::span<const CellRef> marked) const {
    HierarchicalMesh out(*this);
    int max_marked_level = -1;
    for (const CellRef& m : marked) {
        if (m.level < 0 || m.level >= num_levels() || !is_active(m.level, m.cell))
            throw std::invalid_argument("refine: cell (" + std::to_string(m.level) +
                                        ", " + std::to_string(m.cell.i) + ", " +
                                        std::to_string(m.cell.j) + ") is not active");
        max_marked_level = std::max(max_marked_level, m.level);
    }
    if (max_marked_level == num_levels() - 1) {
        out.spaces_.push_back(spaces_.back().refined());
        out.active_.emplace_back();
        out.domain_.emplace_back();
    }
    for (const CellRef& m : marked) {
        out.active_[m.level].erase(m.cell);
        for (int di = 0; di < 2; ++di)
            for (int dj = 0; dj < 2; ++dj) {
                const Index2 child{2 * m.cell.i + di, 2 * m.cell.j + dj};
                out.active_[m.level + 1].insert(child);
                out.domain_[m.level + 1].insert(child);
            }
    }
    return out;
}

bool ActiveIndexSet::contains(const LevelIndex& f) const {
    if (f.level < 0 || f.level >= int(per_level.size())) return false;
    const auto& v = per_level[f.level];
    return std::binary_search(v.begin(), v.end(), f.index);
}

ActiveIndexSet compute_active_indices(const HierarchicalMesh& mesh) {
    ActiveIndexSet out;
    const int M = mesh.num_levels();
    out.per_level.resize(M);
    for (int l = 0; l < M; ++l) {
        const TensorSpace& sp = mesh.space(l);
        // every member of A^l keeps at least one active level-l cell in its
        // support (a support cell inside Omega^l but not inside Omega^{l+1}
        // is itself active), so active level-l cells yield all candidates
        CellSet candidates;
        for (const Index2& c : mesh.active_cells(l)) {
            const IndexSpan bu = sp.u().basis_on_cells(c.i, c.i);
            const IndexSpan bv = sp.v().basis_on_cells(c.j, c.j);
            for (int i = bu.lo; i <= bu.hi; ++i)
                for (int j = bv.lo; j <= bv.hi; ++j)
                    candidates.insert({sp.u().wrap_index(i), j});
        }
        std::vector<Index2>& act = out.per_level[l];
        for (const Index2& J : candidates)
            if (mesh.support_in_domain(l, J, l) && !mesh.support_in_domain(l, J, l + 1))
                act.push_back(J);
        std::sort(act.begin(), act.end());
    }
    return out;
}

ThbFunction truncate(const HierarchicalMesh& mesh, LevelIndex mother) {
    const int M = mesh.num_levels();
    ThbFunction f;
    f.mother = mother;
    f.levels.resize(M - mother.level);

    Index2Map<double> cur;
    cur[mother.index] = 1.0;
    int cur_level = mother.level;

    std::vector<std::pair<Index2, double>> ts;
    for (int k = mother.level + 1; k < M && !cur.empty(); ++k) {
        Index2Map<double> next;
        for (const auto& [K, sigma] : cur) {
            if (!mesh.support_meets_domain(cur_level, K, k)) {
                // no part of this coefficient can be truncated now or at any
                // finer level (domains are nested): it settles here
                f.levels[cur_level - mother.level][K] += sigma;
                continue;
            }
            mesh.space(cur_level).two_scale(K, ts);
            for (const auto& [K2, w] : ts) next[K2] += sigma * w;
        }
        // truncation: discard refined-space coefficients living inside Omega^k
        for (auto it = next.begin(); it != next.end();) {
            if (mesh.support_in_domain(k, it->first, k))
                it = next.erase(it);
            else
                ++it;
        }
        cur = std::move(next);
        cur_level = k;
    }
    for (const auto& [K, sigma] : cur) f.levels[cur_level - mother.level][K] += sigma;
    return f;
}

double eval_thb(const HierarchicalMesh& mesh, const ThbFunction& f, Vec2 x) {
    double s = 0.0;
    std::vector<std::pair<Index2, double>> nz;
    for (std::size_t k = 0; k < f.levels.size(); ++k) {
        const auto& coeffs = f.levels[k];
        if (coeffs.empty()) continue;
        mesh.space(f.mother.level + int(k)).eval_nonzero(x, 0, 0, nz);
        for (const auto& [K, val] : nz) {
            auto it = coeffs.find(K);
            if (it != coeffs.end()) s += it->second * val;
        }
    }
    return s;
}

}  // namespace thb
