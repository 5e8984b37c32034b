#include "thb/local_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace thb {

double PointCloud::bbox_diagonal() const {
    if (points.empty()) return 0.0;
    Vec3 lo = points.front(), hi = points.front();
    for (const Vec3& p : points) {
        lo.x = std::min(lo.x, p.x); lo.y = std::min(lo.y, p.y); lo.z = std::min(lo.z, p.z);
        hi.x = std::max(hi.x, p.x); hi.y = std::max(hi.y, p.y); hi.z = std::max(hi.z, p.z);
    }
    return (hi - lo).norm();
}

void PointCloud::validate(const Box2& domain, bool periodic_u) {
    if (points.size() != params.size())
        throw std::invalid_argument("point cloud: point/parameter count mismatch");
    if (points.empty())
        throw std::invalid_argument("point cloud: empty");
    const double period = domain.width();
    for (std::size_t i = 0; i < params.size(); ++i) {
        Vec2& p = params[i];
        if (periodic_u) {
            double y = std::fmod(p.u - domain.u0, period);
            if (y < 0.0) y += period;
            if (y >= period) y = 0.0;
            p.u = domain.u0 + y;
        } else if (!(p.u >= domain.u0 && p.u <= domain.u1)) {
            throw std::invalid_argument("parameter " + std::to_string(i) +
                                        ": u outside the domain");
        }
        if (!(p.v >= domain.v0 && p.v <= domain.v1))
            throw std::invalid_argument("parameter " + std::to_string(i) +
                                        ": v outside the domain");
        if (!points[i].finite() || !std::isfinite(p.u) || !std::isfinite(p.v))
            throw std::invalid_argument("record " + std::to_string(i) + ": non-finite value");
    }
}

void LocalFitParams::validate() const {
    if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
    if (n_min < 3) throw std::invalid_argument("n_min must be at least 3");
    if (!(delta >= 0.0 && delta <= 1.0))
        throw std::invalid_argument("delta must be in [0, 1]");
    if (!(collinear_tol >= 0.0))
        throw std::invalid_argument("collinear_tol must be non-negative");
}

LevelBuckets::LevelBuckets(const TensorSpace& space, const PointCloud& cloud)
    : nu_(space.u().cells()), nv_(space.v().cells()) {
    buckets_.resize(std::size_t(nu_) * nv_);
    for (std::size_t id = 0; id < cloud.size(); ++id) {
        const Index2 c = space.cell_of(cloud.params[id]);
        buckets_[std::size_t(c.i) * nv_ + c.j].push_back(int(id));
    }
}

namespace {

struct BoxCounts {
    long points = 0;
    long occupied_cells = 0;
    long total_cells = 0;
};

BoxCounts count_box(const TensorSpace& sp, const LevelBuckets& bk,
                    const IndexSpan& cu, const IndexSpan& cv) {
    BoxCounts c;
    for (int i = cu.lo; i <= cu.hi; ++i) {
        const int wi = sp.u().wrap_index(i);
        for (int j = cv.lo; j <= cv.hi; ++j) {
            const auto& ids = bk.cell({wi, j});
            c.points += long(ids.size());
            if (!ids.empty()) ++c.occupied_cells;
            ++c.total_cells;
        }
    }
    return c;
}

// one ring of level cells around the box, clipped / wrapped; false when the
// box already covers the whole domain in both directions
bool grow_ring(const TensorSpace& sp, IndexSpan& cu, IndexSpan& cv) {
    bool changed = false;
    const int nu = sp.u().cells();
    if (sp.u().periodic()) {
        if (cu.count() < nu) {
            cu = {cu.lo - 1, cu.hi + 1};
            if (cu.count() >= nu) cu = {0, nu - 1};
            changed = true;
        }
    } else {
        const IndexSpan grown{std::max(0, cu.lo - 1), std::min(nu - 1, cu.hi + 1)};
        if (grown != cu) { cu = grown; changed = true; }
    }
    const int nv = sp.v().cells();
    const IndexSpan grown_v{std::max(0, cv.lo - 1), std::min(nv - 1, cv.hi + 1)};
    if (grown_v != cv) { cv = grown_v; changed = true; }
    return changed;
}

}  // namespace

LocalProblem gather_local_data(const PointCloud& cloud, const TensorSpace& space,
                               const LevelBuckets& buckets, LevelIndex mother,
                               const LocalFitParams& params) {
    if (cloud.size() == 0) throw std::invalid_argument("gather_local_data: empty cloud");
    LocalProblem pr;
    pr.mother = mother;
    space.support_spans(mother.index, pr.cells_u, pr.cells_v);

    BoxCounts counts = count_box(space, buckets, pr.cells_u, pr.cells_v);
    while (counts.points < params.n_min) {
        if (!grow_ring(space, pr.cells_u, pr.cells_v)) {
            pr.starved = counts.points < params.n_min;
            break;
        }
        ++pr.rings_n_min;
        counts = count_box(space, buckets, pr.cells_u, pr.cells_v);
    }
    if (params.delta > 0.0) {
        while (double(counts.occupied_cells) <
               params.delta * double(counts.total_cells)) {
            if (!grow_ring(space, pr.cells_u, pr.cells_v)) break;
            ++pr.rings_density;
            counts = count_box(space, buckets, pr.cells_u, pr.cells_v);
        }
    }

    for (int i = pr.cells_u.lo; i <= pr.cells_u.hi; ++i) {
        const int wi = space.u().wrap_index(i);
        for (int j = pr.cells_v.lo; j <= pr.cells_v.hi; ++j) {
            const auto& ids = buckets.cell({wi, j});
            pr.point_ids.insert(pr.point_ids.end(), ids.begin(), ids.end());
        }
    }
    std::sort(pr.point_ids.begin(), pr.point_ids.end());

    pr.basis_u = space.u().basis_on_cells(pr.cells_u.lo, pr.cells_u.hi);
    pr.basis_v = space.v().basis_on_cells(pr.cells_v.lo, pr.cells_v.hi);
    return pr;
}

bool collinear(std::span<const Vec2> sites, double tol) {
    const std::size_t m = sites.size();
    if (m <= 2) return true;
    double mu = 0.0, mv = 0.0;
    for (const Vec2& p : sites) { mu += p.u; mv += p.v; }
    mu /= double(m);
    mv /= double(m);
    double suu = 0.0, suv = 0.0, svv = 0.0;
    for (const Vec2& p : sites) {
        const double du = p.u - mu, dv = p.v - mv;
        suu += du * du;
        suv += du * dv;
        svv += dv * dv;
    }
    Eigen::Matrix2d gram;
    gram << suu, suv, suv, svv;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(gram);
    const double s1 = std::sqrt(std::max(es.eigenvalues()(1), 0.0));
    const double s2 = std::sqrt(std::max(es.eigenvalues()(0), 0.0));
    return s2 <= tol * (s1 + std::numeric_limits<double>::epsilon());
}

namespace {

struct GaussRule {
    int n;
    const double* nodes;    // on [-1, 1]
    const double* weights;
};

const GaussRule& gauss_rule(int q) {
    static const double x1[] = {0.0};
    static const double w1[] = {2.0};
    static const double x2[] = {-0.5773502691896257645, 0.5773502691896257645};
    static const double w2[] = {1.0, 1.0};
    static const double x3[] = {-0.7745966692414833770, 0.0, 0.7745966692414833770};
    static const double w3[] = {0.5555555555555555556, 0.8888888888888888889,
                                0.5555555555555555556};
    static const double x4[] = {-0.8611363115940525752, -0.3399810435848562648,
                                0.3399810435848562648, 0.8611363115940525752};
    static const double w4[] = {0.3478548451374538574, 0.6521451548625461426,
                                0.6521451548625461426, 0.3478548451374538574};
    static const GaussRule rules[] = {
        {1, x1, w1}, {2, x2, w2}, {3, x3, w3}, {4, x4, w4}};
    if (q < 1 || q > 4) throw std::invalid_argument("gauss_rule: order out of range");
    return rules[q - 1];
}

}  // namespace

namespace detail {

Vec2 unwrap_param(const TensorSpace& space, const LocalProblem& problem, Vec2 p) {
    if (!space.u().periodic()) return p;
    const int n = space.u().cells();
    const int c = space.u().cell_of(p.u);
    int off = (c - problem.cells_u.lo) % n;
    if (off < 0) off += n;
    const int target = problem.cells_u.lo + off;
    return {space.u().wrap(p.u) + double(target - c) * space.u().spacing(), p.v};
}

Eigen::MatrixXd collocation_matrix(const LocalProblem& problem, const PointCloud& cloud,
                                   const TensorSpace& space) {
    const int d1 = space.u().degree(), d2 = space.v().degree();
    const int m = problem.num_points();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, problem.num_basis());
    double bu[5], bv[5];
    for (int row = 0; row < m; ++row) {
        const Vec2 p = unwrap_param(space, problem, cloud.params[problem.point_ids[row]]);
        const int fu = space.u().nonzero_basis(p.u, 0, bu);
        const int fv = space.v().nonzero_basis(p.v, 0, bv);
        for (int s = 0; s <= d1; ++s)
            for (int t = 0; t <= d2; ++t)
                A(row, problem.column_of(space, {fu + s, fv + t})) = bu[s] * bv[t];
    }
    return A;
}

}  // namespace detail

Eigen::MatrixXd thin_plate_matrix(const LocalProblem& problem, const TensorSpace& space) {
    const int d1 = space.u().degree(), d2 = space.v().degree();
    const GaussRule& rule = gauss_rule(std::max(d1, d2));
    const double hu = space.u().spacing(), hv = space.v().spacing();
    const double jac = 0.25 * hu * hv;
    const int nfun = (d1 + 1) * (d2 + 1);

    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(problem.num_basis(), problem.num_basis());
    double bu[15], bv[15];  // 3 derivative rows of up to 5 values
    std::vector<int> cols(nfun);
    std::vector<double> dxx(nfun), dxy(nfun), dyy(nfun);

    for (int ci = problem.cells_u.lo; ci <= problem.cells_u.hi; ++ci) {
        const double ua = space.u().a() + double(ci) * hu;
        for (int cj = problem.cells_v.lo; cj <= problem.cells_v.hi; ++cj) {
            const double va = space.v().a() + double(cj) * hv;
            for (int gi = 0; gi < rule.n; ++gi) {
                const double xu = ua + 0.5 * hu * (rule.nodes[gi] + 1.0);
                const int fu = space.u().nonzero_basis(xu, 2, bu);
                for (int gj = 0; gj < rule.n; ++gj) {
                    const double xv = va + 0.5 * hv * (rule.nodes[gj] + 1.0);
                    const int fv = space.v().nonzero_basis(xv, 2, bv);
                    const double w = jac * rule.weights[gi] * rule.weights[gj];
                    int k = 0;
                    for (int s = 0; s <= d1; ++s)
                        for (int t = 0; t <= d2; ++t, ++k) {
                            cols[k] = problem.column_of(space, {fu + s, fv + t});
                            dxx[k] = bu[2 * (d1 + 1) + s] * bv[t];
                            dxy[k] = bu[(d1 + 1) + s] * bv[(d2 + 1) + t];
                            dyy[k] = bu[s] * bv[2 * (d2 + 1) + t];
                        }
                    for (int a = 0; a < nfun; ++a)
                        for (int b2 = 0; b2 < nfun; ++b2)
                            M(cols[a], cols[b2]) +=
                                w * (dxx[a] * dxx[b2] + 2.0 * dxy[a] * dxy[b2] +
                                     dyy[a] * dyy[b2]);
                }
            }
        }
    }
    return M;
}

LocalSolveResult solve_local(const LocalProblem& problem, const PointCloud& cloud,
                             const TensorSpace& space, const LocalFitParams& params) {
    const int m = problem.num_points();
    if (m == 0)
        throw std::invalid_argument("solve_local: no local data inside Omega_J");

    auto mean_of_data = [&] {
        Vec3 s;
        for (int id : problem.point_ids) s += cloud.points[id];
        return s * (1.0 / double(m));
    };

    std::vector<Vec2> sites(m);
    for (int r = 0; r < m; ++r)
        sites[r] = detail::unwrap_param(space, problem, cloud.params[problem.point_ids[r]]);
    if (collinear(sites, params.collinear_tol))
        return {mean_of_data(), true, false};

    const Eigen::MatrixXd A = detail::collocation_matrix(problem, cloud, space);
    const Eigen::MatrixXd ME = thin_plate_matrix(problem, space);
    const Eigen::MatrixXd Q = A.transpose() * A + params.mu * ME;

    Eigen::LLT<Eigen::MatrixXd> llt(Q);
    if (llt.info() != Eigen::Success)
        return {mean_of_data(), true, true};

    Eigen::MatrixXd F(m, 3);
    for (int r = 0; r < m; ++r) {
        const Vec3& f = cloud.points[problem.point_ids[r]];
        F(r, 0) = f.x;
        F(r, 1) = f.y;
        F(r, 2) = f.z;
    }
    const Eigen::MatrixXd B = A.transpose() * F;
    Eigen::MatrixXd C = llt.solve(B);
    C += llt.solve(B - Q * C);  // one step of iterative refinement
    if (!C.allFinite())
        return {mean_of_data(), true, true};

    const int jc = problem.column_of(space, problem.mother.index);
    return {{C(jc, 0), C(jc, 1), C(jc, 2)}, false, false, std::move(C)};
}

}  // namespace thb
