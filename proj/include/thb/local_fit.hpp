#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "thb/bspline.hpp"
#include "thb/types.hpp"

namespace thb {

/// Scattered data set: 3D points with their 2D parameter values. Both are
/// input data; no parametrization is performed here.
struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Vec2> params;

    std::size_t size() const { return points.size(); }

    /// Diagonal of the minimal axis-aligned bounding box of the points.
    double bbox_diagonal() const;

    /// Checks sizes and that every parameter lies in `domain` (clamped
    /// directions exact, periodic u wrapped into [u0, u1) in place).
    /// Throws std::invalid_argument with the offending index otherwise.
    void validate(const Box2& domain, bool periodic_u);
};

/// Tuning of the local regularized least-squares fits.
struct LocalFitParams {
    double mu = 1e-6;            ///< smoothing weight, > 0
    int n_min = 6;               ///< minimum local data count, >= 3
    double delta = 0.0;          ///< occupied-cell density threshold in [0,1]; 0 disables
    double collinear_tol = 1e-10;

    void validate() const;
};

/// Parameter points bucketed by the cells of one tensor space; shared by
/// the local-data gathering, the density check and the cell marking.
class LevelBuckets {
public:
    LevelBuckets(const TensorSpace& space, const PointCloud& cloud);

    const std::vector<int>& cell(Index2 c) const {
        return buckets_[std::size_t(c.i) * nv_ + c.j];
    }
    int nu() const { return nu_; }
    int nv() const { return nv_; }

private:
    int nu_, nv_;
    std::vector<std::vector<int>> buckets_;
};

/// One local approximation problem: the subdomain Omega_J (a box of level
/// cells, unwrapped in a periodic direction), the data inside it and the
/// basis functions that do not vanish on it.
struct LocalProblem {
    LevelIndex mother;
    IndexSpan cells_u, cells_v;  ///< Omega_J as an unwrapped cell box
    IndexSpan basis_u, basis_v;  ///< Lambda_J as unwrapped index ranges
    std::vector<int> point_ids;  ///< I_J, ascending
    int rings_n_min = 0;         ///< ring enlargements to reach n_min
    int rings_density = 0;       ///< further rings to reach the density threshold
    bool starved = false;        ///< Omega_J covers Omega yet |I_J| < n_min

    int num_basis() const { return basis_u.count() * basis_v.count(); }
    int num_points() const { return int(point_ids.size()); }

    /// Column of an (unwrapped) basis index in the Lambda_J ordering;
    /// periodic u indices are first reduced to their representative inside
    /// basis_u.
    int column_of(const TensorSpace& space, Index2 unwrapped) const {
        int i = unwrapped.i;
        if (space.u().periodic()) {
            const int n = space.u().cells();
            i = (i - basis_u.lo) % n;
            if (i < 0) i += n;
            i += basis_u.lo;
        }
        return (i - basis_u.lo) * basis_v.count() + (unwrapped.j - basis_v.lo);
    }
};

/// Initialize Omega_J with the support of the mother function and grow it
/// by whole rings of level cells until it holds at least n_min parameter
/// points; with delta > 0, keep growing until the fraction of Omega_J cells
/// containing a point reaches delta. Rings are clipped at clamped
/// boundaries and wrap in a periodic direction; once Omega_J covers Omega
/// the loops stop (starved is set if the count is still short).
LocalProblem gather_local_data(const PointCloud& cloud, const TensorSpace& space,
                               const LevelBuckets& buckets, LevelIndex mother,
                               const LocalFitParams& params);

/// True iff the sites lie on one straight line up to `tol`: the second
/// singular value of the centered coordinate matrix is at most
/// tol * (first singular value + machine epsilon). Two or fewer sites are
/// always collinear.
bool collinear(std::span<const Vec2> sites, double tol);

/// Thin-plate energy matrix over Omega_J in the Lambda_J basis,
///   M[i][r] = integral of Bi_xx Br_xx + 2 Bi_xy Br_xy + Bi_yy Br_yy,
/// assembled cellwise with a max(d1, d2)-point Gauss-Legendre rule per
/// direction. Symmetric positive semidefinite; vanishes on coefficient
/// vectors representing linear polynomials.
Eigen::MatrixXd thin_plate_matrix(const LocalProblem& problem, const TensorSpace& space);

struct LocalSolveResult {
    Vec3 lambda;
    bool mean_fallback = false;         ///< collinear sites: mean of the local data
    bool factorization_failed = false;  ///< fell back despite non-collinear sites
    /// Full local solution, one column per coordinate (num_basis x 3);
    /// empty when the mean branch was taken.
    Eigen::MatrixXd coefficients;
};

/// Solve the local problem: minimize sum |s(x_i) - f_i|^2 + mu E(s) over
/// the local spline space and return the coefficient of the mother
/// function, one Cholesky factorization shared by the three coordinates.
/// Collinear sites (or a failed factorization) yield the mean of the local
/// data instead.
LocalSolveResult solve_local(const LocalProblem& problem, const PointCloud& cloud,
                             const TensorSpace& space, const LocalFitParams& params);

namespace detail {
/// Unwrap the parameter onto the cell box of `problem` in the periodic u
/// direction (identity when clamped).
Vec2 unwrap_param(const TensorSpace& space, const LocalProblem& problem, Vec2 p);

/// Collocation matrix A: one row per local point, one column per member of
/// Lambda_J, entries B_I(x_i).
Eigen::MatrixXd collocation_matrix(const LocalProblem& problem, const PointCloud& cloud,
                                   const TensorSpace& space);
}  // namespace detail

}  // namespace thb
