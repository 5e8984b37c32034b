#include "thb/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include "thb/parallel.hpp"

namespace thb::oracle {

namespace {

double naive_rec(const KnotVector& kv, int i, int p, double x) {
    if (p == 0) {
        const double lo = kv.knot(i), hi = kv.knot(i + 1);
        if (x >= lo && x < hi) return 1.0;
        // close the last nonempty clamped span so sums reach x = b
        if (!kv.periodic() && x == kv.b() && hi == kv.b() && lo < hi) return 1.0;
        return 0.0;
    }
    double value = 0.0;
    const double d1 = kv.knot(i + p) - kv.knot(i);
    if (d1 > 0.0) value += (x - kv.knot(i)) / d1 * naive_rec(kv, i, p - 1, x);
    const double d2 = kv.knot(i + p + 1) - kv.knot(i + 1);
    if (d2 > 0.0) value += (kv.knot(i + p + 1) - x) / d2 * naive_rec(kv, i + 1, p - 1, x);
    return value;
}

}  // namespace

double naive_basis(const KnotVector& kv, int basis, double x) {
    if (!kv.periodic()) return naive_rec(kv, basis, kv.degree(), x);
    const double y = kv.wrap(x);
    const int n = kv.cells();
    double s = 0.0;
    for (int t = -1; t <= 1; ++t) s += naive_rec(kv, basis + t * n, kv.degree(), y);
    return s;
}

double naive_basis2(const TensorSpace& space, Index2 J, Vec2 p) {
    return naive_basis(space.u(), J.i, p.u) * naive_basis(space.v(), J.j, p.v);
}

namespace {

// one Boehm insertion of x into (knots, coeffs) of the given degree
void boehm_insert(std::vector<double>& knots, std::vector<double>& coeffs, int degree,
                  double x) {
    int span = int(knots.size()) - 2;
    while (span > 0 && !(knots[span] <= x && x < knots[span + 1])) --span;
    std::vector<double> out(coeffs.size() + 1);
    for (int i = 0; i < int(out.size()); ++i) {
        if (i <= span - degree) {
            out[i] = coeffs[i];
        } else if (i > span) {
            out[i] = coeffs[i - 1];
        } else {
            const double denom = knots[i + degree] - knots[i];
            const double alpha = denom > 0.0 ? (x - knots[i]) / denom : 0.0;
            out[i] = alpha * coeffs[i] + (1.0 - alpha) * coeffs[i - 1];
        }
    }
    coeffs = std::move(out);
    knots.insert(knots.begin() + span + 1, x);
}

std::vector<double> boehm_refine_clamped(const KnotVector& coarse, int basis) {
    const int p = coarse.degree(), n = coarse.cells();
    std::vector<double> knots(n + 2 * p + 1);
    for (int j = 0; j < int(knots.size()); ++j) knots[j] = coarse.knot(j);
    std::vector<double> coeffs(coarse.dimension(), 0.0);
    coeffs[basis] = 1.0;
    for (int c = 0; c < n; ++c)
        boehm_insert(knots, coeffs, p, coarse.a() + (double(c) + 0.5) * coarse.spacing());
    return coeffs;  // dimension 2n + p, the fine dimension
}

}  // namespace

std::vector<std::pair<int, double>> subdivision_weights(const KnotVector& coarse,
                                                        int basis) {
    std::vector<std::pair<int, double>> out;
    if (!coarse.periodic()) {
        const std::vector<double> w = boehm_refine_clamped(coarse, basis);
        for (int k = 0; k < int(w.size()); ++k)
            if (w[k] != 0.0) out.push_back({k, w[k]});
        return out;
    }
    // periodic: read the uniform mask off an interior function of a wide
    // clamped helper vector of the same degree
    const int p = coarse.degree();
    const int helper_cells = 4 * (p + 2);
    const KnotVector helper(p, 0.0, double(helper_cells), helper_cells,
                            Boundary::Clamped);
    const int mid = helper_cells / 2;
    const std::vector<double> w = boehm_refine_clamped(helper, mid);
    for (int j = 0; j <= p + 1; ++j)
        out.push_back({2 * basis - p + j, w[2 * mid - p + j]});
    return out;
}

namespace {

// is the level-`cell_level` cell inside Omega^{omega_level}? Straight from
// the definition: covered by active cells of levels >= omega_level.
bool cell_covered(const HierarchicalMesh& mesh, int omega_level, int cell_level,
                  Index2 cell) {
    for (int j = omega_level; j <= cell_level; ++j)
        if (mesh.is_active(j, {cell.i >> (cell_level - j), cell.j >> (cell_level - j)}))
            return true;
    if (cell_level + 1 >= mesh.num_levels()) return false;
    for (int di = 0; di < 2; ++di)
        for (int dj = 0; dj < 2; ++dj)
            if (!cell_covered(mesh, omega_level, cell_level + 1,
                              {2 * cell.i + di, 2 * cell.j + dj}))
                return false;
    return true;
}

bool support_in_omega(const HierarchicalMesh& mesh, int level, Index2 J,
                      int omega_level) {
    if (omega_level >= mesh.num_levels()) return false;  // Omega^M is empty
    const TensorSpace& sp = mesh.space(level);
    IndexSpan su, sv;
    sp.support_spans(J, su, sv);
    for (int i = su.lo; i <= su.hi; ++i)
        for (int j = sv.lo; j <= sv.hi; ++j) {
            const Index2 c{sp.u().wrap_index(i), j};
            if (omega_level <= level) {
                if (!cell_covered(mesh, omega_level, level, c)) return false;
            } else {
                // omega_level == level + 1: check the four children
                for (int di = 0; di < 2; ++di)
                    for (int dj = 0; dj < 2; ++dj)
                        if (!cell_covered(mesh, omega_level, level + 1,
                                          {2 * c.i + di, 2 * c.j + dj}))
                            return false;
            }
        }
    return true;
}

}  // namespace

bool cell_in_omega(const HierarchicalMesh& mesh, int level, Index2 cell) {
    return cell_covered(mesh, level, level, cell);
}

ActiveIndexSet active_indices_bruteforce(const HierarchicalMesh& mesh) {
    ActiveIndexSet out;
    out.per_level.resize(mesh.num_levels());
    for (int l = 0; l < mesh.num_levels(); ++l) {
        const TensorSpace& sp = mesh.space(l);
        for (int i = 0; i < sp.u().dimension(); ++i)
            for (int j = 0; j < sp.v().dimension(); ++j) {
                const Index2 J{i, j};
                if (support_in_omega(mesh, l, J, l) &&
                    !support_in_omega(mesh, l, J, l + 1))
                    out.per_level[l].push_back(J);
            }
        std::sort(out.per_level[l].begin(), out.per_level[l].end());
    }
    return out;
}

namespace {

long flat_index(const TensorSpace& sp, Index2 J) {
    return long(J.i) * sp.v().dimension() + J.j;
}

// dense subdivision of a full tensor coefficient vector to the next level
Eigen::VectorXd refine_dense(const TensorSpace& coarse, const TensorSpace& fine,
                             const Eigen::VectorXd& c) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(fine.dimension());
    for (int i = 0; i < coarse.u().dimension(); ++i) {
        const auto wu = subdivision_weights(coarse.u(), i);
        for (int j = 0; j < coarse.v().dimension(); ++j) {
            const double cij = c[long(i) * coarse.v().dimension() + j];
            if (cij == 0.0) continue;
            const auto wv = subdivision_weights(coarse.v(), j);
            for (const auto& [ku, au] : wu)
                for (const auto& [kv, av] : wv)
                    out[flat_index(fine, {fine.u().wrap_index(ku), kv})] += cij * au * av;
        }
    }
    return out;
}

}  // namespace

Eigen::VectorXd thb_finest_expansion(const HierarchicalMesh& mesh, LevelIndex mother) {
    const int M = mesh.num_levels();
    Eigen::VectorXd c = Eigen::VectorXd::Zero(mesh.space(mother.level).dimension());
    c[flat_index(mesh.space(mother.level), mother.index)] = 1.0;
    for (int k = mother.level + 1; k < M; ++k) {
        c = refine_dense(mesh.space(k - 1), mesh.space(k), c);
        const TensorSpace& sp = mesh.space(k);
        for (int i = 0; i < sp.u().dimension(); ++i)
            for (int j = 0; j < sp.v().dimension(); ++j)
                if (c[flat_index(sp, {i, j})] != 0.0 && support_in_omega(mesh, k, {i, j}, k))
                    c[flat_index(sp, {i, j})] = 0.0;
    }
    return c;
}

double eval_dense(const TensorSpace& space, const Eigen::VectorXd& coeffs, Vec2 p) {
    double s = 0.0;
    for (int i = 0; i < space.u().dimension(); ++i) {
        const double bu = naive_basis(space.u(), i, p.u);
        if (bu == 0.0) continue;
        for (int j = 0; j < space.v().dimension(); ++j) {
            const double c = coeffs[flat_index(space, {i, j})];
            if (c != 0.0) s += c * bu * naive_basis(space.v(), j, p.v);
        }
    }
    return s;
}

void verify_mesh_invariants(const HierarchicalMesh& mesh) {
    const int M = mesh.num_levels();
    if (M < 1) throw std::logic_error("mesh has no levels");
    const TensorSpace& finest = mesh.space(M - 1);
    const int nu = finest.u().cells(), nv = finest.v().cells();
    // owner level of every finest-level microcell; must be unique
    std::vector<signed char> owner(std::size_t(nu) * nv, -1);
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) {
            int count = 0, who = -1;
            for (int l = 0; l < M; ++l) {
                const int shift = M - 1 - l;
                if (mesh.is_active(l, {i >> shift, j >> shift})) {
                    ++count;
                    who = l;
                }
            }
            if (count != 1)
                throw std::logic_error("active cells do not partition the domain at (" +
                                       std::to_string(i) + "," + std::to_string(j) + ")");
            owner[std::size_t(i) * nv + j] = static_cast<signed char>(who);
        }
    // Omega^{l+1} must be a union of level-l cells: no level-l cell may be
    // only partially covered by finer-level owners
    for (int l = 0; l + 1 < M; ++l) {
        const int shift = M - 1 - l;
        const int cu = mesh.space(l).u().cells(), cv = mesh.space(l).v().cells();
        for (int i = 0; i < cu; ++i)
            for (int j = 0; j < cv; ++j) {
                long inside = 0, total = 0;
                for (int di = 0; di < (1 << shift); ++di)
                    for (int dj = 0; dj < (1 << shift); ++dj) {
                        ++total;
                        if (owner[std::size_t((i << shift) + di) * nv +
                                  ((j << shift) + dj)] > l)
                            ++inside;
                    }
                if (inside != 0 && inside != total)
                    throw std::logic_error(
                        "Omega^{l+1} is not a union of level-l cells at level " +
                        std::to_string(l));
            }
    }
}

BruteMinimizeResult brute_minimize(const DenseQuadraticProblem& problem) {
    const Eigen::MatrixXd& Q = problem.Q;
    const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-14 * scale)
        throw std::invalid_argument("brute_minimize: Q is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double emax = std::max(std::abs(ev(ev.size() - 1)), std::abs(ev(0)));
    const double cut = 1e-12 * std::max(emax, 1e-300);
    BruteMinimizeResult res;
    res.min_eigenvalue = ev(0);
    res.degenerate = ev(0) <= cut;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
    for (int i = 0; i < ev.size(); ++i)
        if (ev(i) > cut) inv(i) = 1.0 / ev(i);
    res.c = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() *
            problem.b;
    return res;
}

std::vector<CellRef> mark_cells_bruteforce(const HierarchicalSurface& surface,
                                           const PointCloud& cloud,
                                           std::span<const double> errors,
                                           const FitConfig& config) {
    const HierarchicalMesh& mesh = surface.mesh();
    const int threshold =
        (config.n_loc + config.n1 * config.n2 - 1) / (config.n1 * config.n2);
    std::set<CellRef> marked;
    for (int l = 0; l < mesh.num_levels(); ++l) {
        const TensorSpace& sp = mesh.space(l);
        const double hu = sp.u().spacing(), hv = sp.v().spacing();
        for (const Index2& J : surface.active().per_level[l]) {
            IndexSpan su, sv;
            sp.support_spans(J, su, sv);
            bool offending = false;
            std::vector<int> counts(std::size_t(config.n1) * config.n2, 0);
            for (std::size_t id = 0; id < cloud.size(); ++id) {
                const Index2 c = sp.cell_of(cloud.params[id]);
                int ci = c.i;
                if (sp.u().periodic()) {
                    int off = (c.i - su.lo) % sp.u().cells();
                    if (off < 0) off += sp.u().cells();
                    ci = su.lo + off;
                }
                if (!(su.contains(ci) && sv.contains(c.j))) continue;
                if (errors[id] > config.epsilon) offending = true;
                double uu = cloud.params[id].u;
                if (sp.u().periodic()) uu = sp.u().wrap(uu) + double(ci - c.i) * hu;
                const double u0 = sp.u().a() + su.lo * hu;
                const double v0 = sp.v().a() + sv.lo * hv;
                const int s1 = std::min(config.n1 - 1,
                                        int(config.n1 * (uu - u0) / (su.count() * hu)));
                const int s2 =
                    std::min(config.n2 - 1, int(config.n2 * (cloud.params[id].v - v0) /
                                                (sv.count() * hv)));
                ++counts[std::size_t(s1) * config.n2 + s2];
            }
            if (!offending) continue;
            if (*std::min_element(counts.begin(), counts.end()) < threshold) continue;
            for (int i = su.lo; i <= su.hi; ++i)
                for (int j = sv.lo; j <= sv.hi; ++j) {
                    const Index2 cell{sp.u().wrap_index(i), j};
                    if (mesh.is_active(l, cell)) marked.insert({l, cell});
                }
        }
    }
    return {marked.begin(), marked.end()};
}

std::vector<BaselineLevel> uniform_baseline(PointCloud cloud, const FitConfig& config) {
    config.validate();
    cloud.validate(config.domain, config.periodic_u);
    std::vector<BaselineLevel> out;
    TensorSpace space = make_root_space(config.degree_u, config.degree_v, config.grid_u,
                                        config.grid_v, config.domain, config.periodic_u);
    for (int level = 0; level < config.max_levels; ++level) {
        if (level > 0) space = space.refined();
        const LevelBuckets buckets(space, cloud);
        const int dv = space.v().dimension();
        const long dim = space.dimension();
        std::vector<Vec3> coeffs(static_cast<std::size_t>(dim));
        parallel_for(dim, config.threads, [&](long t) {
            const Index2 J{int(t / dv), int(t % dv)};
            const LocalProblem pr =
                gather_local_data(cloud, space, buckets, {level, J}, config.local);
            coeffs[std::size_t(t)] = solve_local(pr, cloud, space, config.local).lambda;
        });
        std::vector<double> errors(cloud.size());
        parallel_for(long(cloud.size()), config.threads, [&](long i) {
            thread_local std::vector<std::pair<Index2, double>> nz;
            space.eval_nonzero(cloud.params[i], 0, 0, nz);
            Vec3 s;
            for (const auto& [K, val] : nz) s += coeffs[std::size_t(K.i) * dv + K.j] * val;
            errors[i] = (s - cloud.points[i]).norm();
        });
        long within = 0;
        double mx = 0.0;
        for (double e : errors) {
            if (e <= config.epsilon) ++within;
            mx = std::max(mx, e);
        }
        out.push_back({level, dim, double(within) / double(cloud.size()), mx});
    }
    return out;
}

}  // namespace thb::oracle
