#pragma once

#include <utility>
#include <vector>

#include "thb/types.hpp"

namespace thb {

enum class Boundary { Clamped, Periodic };

/// Univariate B-spline space on a uniform partition of [a, b] into `cells`
/// equal spans.
///
/// Knot layout (index convention used throughout): basis function i is
/// supported by knots t_i .. t_{i+d+1} with
///   clamped : t_j = a + clamp(j - d, 0, cells) * h   (ends repeated d+1 times)
///   periodic: t_j = a + (j - d) * h                  (uniform on the whole line)
/// so basis i covers cells [i - d, i] (clipped to [0, cells) when clamped,
/// taken modulo `cells` when periodic) and the functions that do not vanish
/// on cell c are exactly c .. c + d.
///
/// Periodic evaluation works on the unwrapped line: indices outside
/// [0, cells) denote the wrapped function shifted by a whole period, which
/// keeps local (per-cell) computations free of seam case analysis.
class KnotVector {
public:
    KnotVector(int degree, double a, double b, int cells, Boundary bc);

    int degree() const { return degree_; }
    int cells() const { return cells_; }
    bool periodic() const { return bc_ == Boundary::Periodic; }
    double a() const { return a_; }
    double b() const { return b_; }
    double spacing() const { return h_; }

    /// Number of distinct basis functions: cells + degree when clamped,
    /// cells when periodic.
    int dimension() const { return periodic() ? cells_ : cells_ + degree_; }

    /// Knot t_j of the padded knot array (any j for periodic).
    double knot(int j) const;

    /// Periodic: x shifted into [a, b). Clamped: x unchanged.
    double wrap(double x) const;
    /// Periodic: basis/cell index modulo the level size. Clamped: identity.
    int wrap_index(int i) const;

    /// Cell containing x (half-open attribution, x == b goes to the last
    /// cell when clamped). Throws std::domain_error when x lies outside
    /// [a, b] in a clamped direction. Periodic input is wrapped first.
    int cell_of(double x) const;

    /// Values and derivatives of the degree+1 basis functions that do not
    /// vanish at x. Writes ders[k * (degree+1) + t] = d^k B_{first + t}(x)
    /// for k = 0..nders and returns `first` (an unwrapped index; equal to
    /// the containing cell). For periodic vectors x may be any real number;
    /// clamped vectors require a <= x <= b.
    int nonzero_basis(double x, int nders, double* ders) const;

    /// Support of basis i as an inclusive cell range. Clamped ranges are
    /// clipped to [0, cells); periodic ranges are unwrapped.
    IndexSpan support(int basis) const;

    /// Basis functions that do not vanish on the (inclusive, unwrapped)
    /// cell range; the inverse of `support`.
    IndexSpan basis_on_cells(int cell_lo, int cell_hi) const;

    /// Two-scale representation of basis i in the dyadically refined vector
    /// (same degree, 2x cells): B_i = sum w_k B_k^{fine}. Fine indices are
    /// unwrapped. Weights are exact binomial masks in the periodic case and
    /// discrete B-splines (Oslo recursion) in the clamped case.
    std::vector<std::pair<int, double>> two_scale(int basis) const;

    /// Greville abscissa of basis i (mean of its d interior knots).
    double greville(int basis) const;

    /// Same space one dyadic level finer.
    KnotVector refined() const { return KnotVector(degree_, a_, b_, 2 * cells_, bc_); }

private:
    int degree_;
    int cells_;
    double a_, b_, h_;
    Boundary bc_;
};

/// Tensor-product B-spline space of one hierarchy level. The u direction
/// may be periodic; v is always clamped.
class TensorSpace {
public:
    TensorSpace(int level, KnotVector u, KnotVector v);

    int level() const { return level_; }
    const KnotVector& u() const { return u_; }
    const KnotVector& v() const { return v_; }
    long dimension() const { return long(u_.dimension()) * v_.dimension(); }
    Box2 domain() const { return {u_.a(), u_.b(), v_.a(), v_.b()}; }

    Index2 wrap_index(Index2 J) const { return {u_.wrap_index(J.i), v_.wrap_index(J.j)}; }
    Index2 wrap_cell(Index2 c) const { return {u_.wrap_index(c.i), c.j}; }

    /// Cell containing p (periodic u wrapped first).
    Index2 cell_of(Vec2 p) const { return {u_.cell_of(p.u), v_.cell_of(p.v)}; }
    Box2 cell_box(Index2 cell) const;

    /// All (d1+1)(d2+1) basis functions not vanishing at p together with the
    /// value of their (du, dv) partial derivative; indices are wrapped.
    /// Throws std::domain_error when p is outside the domain in a clamped
    /// direction.
    void eval_nonzero(Vec2 p, int du, int dv,
                      std::vector<std::pair<Index2, double>>& out) const;

    /// Support of basis J as an unwrapped cell-range box (clipped in
    /// clamped directions).
    void support_spans(Index2 J, IndexSpan& su, IndexSpan& sv) const;

    /// Support of basis J as the explicit list of wrapped level cells.
    std::vector<Index2> support_cells(Index2 J) const;

    /// Geometric box of the unwrapped support (may extend past b in a
    /// periodic direction).
    Box2 support_box(Index2 J) const;

    /// Two-scale representation in the level+1 space: wrapped fine indices
    /// with their weights, combined per tensor product.
    void two_scale(Index2 J, std::vector<std::pair<Index2, double>>& out) const;

    TensorSpace refined() const {
        return TensorSpace(level_ + 1, u_.refined(), v_.refined());
    }

private:
    int level_;
    KnotVector u_, v_;
};

/// Level-0 space on an m1 x m2 grid over `domain`.
TensorSpace make_root_space(int degree_u, int degree_v, int m1, int m2,
                            const Box2& domain, bool periodic_u);

}  // namespace thb
