#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "thb/adaptive_fit.hpp"
#include "thb/bspline.hpp"
#include "thb/hierarchy.hpp"
#include "thb/local_fit.hpp"
#include "thb/types.hpp"

// Independent reference implementations used by the tests: plain recursive
// evaluation, knot insertion one midpoint at a time, full dense expansions,
// and an eigen-decomposition minimizer. Clarity over speed; instance sizes
// are capped by the callers.
namespace thb::oracle {

/// B_i(x) by the plain two-term recursion on the knot accessor. Periodic
/// vectors sum the unwrapped translates; the last clamped span is closed so
/// that the partition of unity holds at x = b.
double naive_basis(const KnotVector& kv, int basis, double x);

/// Tensor product of naive univariate values (wrapped index).
double naive_basis2(const TensorSpace& space, Index2 J, Vec2 p);

/// Coefficients of coarse basis function `basis` in the dyadically refined
/// vector, computed by inserting every midpoint with Boehm's rule (clamped),
/// or by reading the interior mask off a clamped helper vector (periodic).
std::vector<std::pair<int, double>> subdivision_weights(const KnotVector& coarse,
                                                        int basis);

/// Is the level-`level` cell contained in Omega^`level`? Evaluated from the
/// definition: covered by active cells of levels >= `level`, recursing into
/// children.
bool cell_in_omega(const HierarchicalMesh& mesh, int level, Index2 cell);

/// A^l by full enumeration of Gamma^l against the definition.
ActiveIndexSet active_indices_bruteforce(const HierarchicalMesh& mesh);

/// Dense level-(M-1) coefficients of the cumulative truncation of the
/// mother, built with dense per-level subdivision matrices and the
/// truncation definition applied level by level. Flattened as
/// i * dim_v + j.
Eigen::VectorXd thb_finest_expansion(const HierarchicalMesh& mesh, LevelIndex mother);

/// Sum over the whole (flattened) coefficient vector with naive basis
/// values.
double eval_dense(const TensorSpace& space, const Eigen::VectorXd& coeffs, Vec2 p);

/// Checks that the active cells partition the domain and that every
/// Omega^{l+1} is a union of level-l cells, by rasterizing to the finest
/// level. Throws std::logic_error on the first violation.
void verify_mesh_invariants(const HierarchicalMesh& mesh);

/// Quadratic form c^T Q c - 2 b^T c (+ const), one column of b per
/// coordinate.
struct DenseQuadraticProblem {
    Eigen::MatrixXd Q;
    Eigen::MatrixXd b;
};

struct BruteMinimizeResult {
    Eigen::MatrixXd c;
    double min_eigenvalue = 0.0;
    bool degenerate = false;  ///< solved on the range of Q only
};

/// Minimizer through a full symmetric eigen-decomposition; requires Q
/// symmetric within 1e-14 relative.
BruteMinimizeResult brute_minimize(const DenseQuadraticProblem& problem);

/// Marking by a direct double loop over levels, active functions and data
/// points; no buckets, no shared machinery with mark_cells.
std::vector<CellRef> mark_cells_bruteforce(const HierarchicalSurface& surface,
                                           const PointCloud& cloud,
                                           std::span<const double> errors,
                                           const FitConfig& config);

/// Metrics of stage one run on globally refined uniform tensor-product
/// spaces, one entry per level 0 .. max_levels-1.
struct BaselineLevel {
    int level = 0;
    long dof = 0;
    double within_fraction = 0.0;
    double max_error = 0.0;
};

std::vector<BaselineLevel> uniform_baseline(PointCloud cloud, const FitConfig& config);

}  // namespace thb::oracle
