#pragma once

#include <functional>
#include <map>
#include <span>
#include <vector>

#include "thb/hierarchy.hpp"
#include "thb/local_fit.hpp"
#include "thb/types.hpp"

namespace thb {

/// All tuning parameters of the two-stage adaptive fit.
struct FitConfig {
    int degree_u = 3, degree_v = 3;
    int grid_u = 4, grid_v = 4;   ///< initial level-0 cells per direction
    bool periodic_u = false;
    Box2 domain{0.0, 1.0, 0.0, 1.0};

    double epsilon = 0.0;  ///< error tolerance (meters)
    double eta = 0.95;     ///< required within-tolerance fraction, in (0, 1]
    int max_levels = 8;    ///< level cap M_max
    int n_loc = 0;         ///< refinement data threshold, >= n_min
    int n1 = 1, n2 = 1;    ///< support subrectangle splits for the marking test

    LocalFitParams local;
    int threads = 1;  ///< stage-one / error-evaluation parallelism (0 = hardware)

    void validate() const;  ///< throws std::invalid_argument on any bad field
};

enum class Termination { Converged, LevelCap, NoCellsMarked };
const char* to_string(Termination t);

struct IterationStats {
    int levels = 1;
    long dof = 0;
    double within_fraction = 0.0;
    double max_error = 0.0;
    long marked_cells = 0;  ///< cells refined to produce this state (0 initially)
    double wall_time_s = 0.0;
};

/// Diagnostics of one stage-one local solve.
struct LocalFitDiagnostics {
    LevelIndex mother;
    int num_points = 0;
    int rings_n_min = 0;
    int rings_density = 0;
    bool starved = false;
    bool mean_fallback = false;
    bool factorization_failed = false;
};

struct FitReport {
    std::vector<IterationStats> iterations;
    std::vector<double> final_errors;  ///< |s(x_i) - f_i|, meters
    Termination termination = Termination::Converged;
    double bbox_diagonal = 0.0;
    std::vector<LocalFitDiagnostics> local_fits;  ///< every solve, in solve order
};

/// The hierarchical quasi-interpolant: a mesh, its active THB basis and one
/// 3D coefficient per active function, s(x) = sum lambda_J^l T_J^l(x).
/// Coefficients are keyed exactly by the active index set; finalize() must
/// run after (re)setting coefficients and before evaluation.
class HierarchicalSurface {
public:
    explicit HierarchicalSurface(HierarchicalMesh mesh);

    const HierarchicalMesh& mesh() const { return mesh_; }
    const ActiveIndexSet& active() const { return active_; }
    const std::map<LevelIndex, Vec3>& coefficients() const { return coeffs_; }

    void set_coefficient(const LevelIndex& key, const Vec3& value);

    /// Active functions whose coefficient has not been set yet (sorted):
    /// after a refinement these are exactly the functions with new mothers.
    std::vector<LevelIndex> missing_coefficients() const;

    /// Builds the truncated basis for every active function (reusing cached
    /// truncations) and the per-level evaluation tables.
    void finalize(int threads = 1);

    Vec3 eval(Vec2 p) const;  ///< requires finalize(); domain-checked

    /// Surface on the refined mesh: coefficients of surviving mothers are
    /// carried over bit-identically; truncations are recomputed only for
    /// mothers whose support meets a refined cell. New mothers start
    /// without coefficients.
    HierarchicalSurface refined(std::span<const CellRef> marked) const;

    /// Truncated representation of an active function (after finalize()).
    const ThbFunction& truncation(const LevelIndex& key) const;

private:
    HierarchicalMesh mesh_;
    ActiveIndexSet active_;
    std::map<LevelIndex, Vec3> coeffs_;
    std::map<LevelIndex, ThbFunction> thb_;
    std::vector<Index2Map<Vec3>> tables_;  // per level: fine coefficient sums
    bool finalized_ = false;
};

/// Lazily built per-level point buckets, shared by stage one and marking.
class BucketCache {
public:
    explicit BucketCache(const PointCloud& cloud) : cloud_(&cloud) {}
    const LevelBuckets& get(const TensorSpace& space);

private:
    const PointCloud* cloud_;
    std::map<int, LevelBuckets> by_level_;
};

/// Pointwise fit errors e(x_i) = |s(x_i) - f_i|, one per data point.
std::vector<double> evaluate_errors(const HierarchicalSurface& surface,
                                    const PointCloud& cloud, int threads = 1);

/// Algorithm step "marking": active level-l cells inside the support of an
/// active B_J^l that (a) carries a data site with error above epsilon and
/// (b) has at least ceil(n_loc / (n1 n2)) sites in every one of the n1 x n2
/// subrectangles of its support. Returned sorted and deduplicated.
std::vector<CellRef> mark_cells(const HierarchicalSurface& surface,
                                const PointCloud& cloud,
                                std::span<const double> errors,
                                const FitConfig& config, BucketCache& buckets);
std::vector<CellRef> mark_cells(const HierarchicalSurface& surface,
                                const PointCloud& cloud,
                                std::span<const double> errors,
                                const FitConfig& config);

/// Called after every completed iteration with the iteration number, the
/// current surface and the current per-point errors.
using FitObserver =
    std::function<void(int, const HierarchicalSurface&, std::span<const double>)>;

/// The two-stage adaptive fit: stage one computes local quasi-interpolation
/// coefficients, then the loop marks cells, refines dyadically, recomputes
/// only coefficients of new mothers and re-evaluates errors until the
/// within-tolerance fraction reaches eta, the level cap stops refinement,
/// or nothing is marked.
std::pair<HierarchicalSurface, FitReport> fit(PointCloud cloud, const FitConfig& config,
                                              const FitObserver& observer = {});

}  // namespace thb
