#include "thb/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace thb {

namespace {
constexpr int kMaxDegree = 4;
}

KnotVector::KnotVector(int degree, double a, double b, int cells, Boundary bc)
    : degree_(degree), cells_(cells), a_(a), b_(b), h_((b - a) / cells), bc_(bc) {
    if (degree < 1 || degree > kMaxDegree)
        throw std::invalid_argument("KnotVector: degree must be in [1, 4], got " +
                                    std::to_string(degree));
    if (cells < 1)
        throw std::invalid_argument("KnotVector: need at least one cell");
    if (!(b > a))
        throw std::invalid_argument("KnotVector: empty interval");
    if (bc == Boundary::Periodic && cells < degree + 1)
        throw std::invalid_argument(
            "KnotVector: a periodic direction needs at least degree+1 cells, got " +
            std::to_string(cells));
}

double KnotVector::knot(int j) const {
    if (periodic()) return a_ + double(j - degree_) * h_;
    const int k = std::clamp(j - degree_, 0, cells_);
    return a_ + double(k) * h_;
}

double KnotVector::wrap(double x) const {
    if (!periodic()) return x;
    const double period = b_ - a_;
    double y = std::fmod(x - a_, period);
    if (y < 0.0) y += period;
    // fmod can round up to the period for x slightly below a multiple
    if (y >= period) y = 0.0;
    return a_ + y;
}

int KnotVector::wrap_index(int i) const {
    if (!periodic()) return i;
    int r = i % cells_;
    if (r < 0) r += cells_;
    return r;
}

int KnotVector::cell_of(double x) const {
    if (periodic()) {
        const double y = wrap(x);
        return std::min(int(std::floor((y - a_) / h_)), cells_ - 1);
    }
    if (!(x >= a_ && x <= b_))
        throw std::domain_error("parameter " + std::to_string(x) +
                                " outside clamped direction [" + std::to_string(a_) +
                                ", " + std::to_string(b_) + "]");
    return std::clamp(int(std::floor((x - a_) / h_)), 0, cells_ - 1);
}

// Basis values and derivatives on one knot span (the standard triangular
// scheme; derivatives by differencing the inverse knot-span table).
int KnotVector::nonzero_basis(double x, int nders, double* out) const {
    const int p = degree_;
    int c;
    if (periodic()) {
        c = int(std::floor((x - a_) / h_));
    } else {
        if (!(x >= a_ && x <= b_))
            throw std::domain_error("parameter " + std::to_string(x) +
                                    " outside clamped direction [" + std::to_string(a_) +
                                    ", " + std::to_string(b_) + "]");
        c = std::clamp(int(std::floor((x - a_) / h_)), 0, cells_ - 1);
    }
    const int span = c + p;

    double ndu[kMaxDegree + 1][kMaxDegree + 1];
    double left[kMaxDegree + 1], right[kMaxDegree + 1];
    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = x - knot(span + 1 - j);
        right[j] = knot(span + j) - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            // lower triangle stores the knot differences; every one of them
            // brackets the (nonempty) current span, so no division by zero
            ndu[j][r] = right[r + 1] + left[j - r];
            const double temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    for (int t = 0; t <= p; ++t) out[t] = ndu[t][p];

    const int kmax = std::min(nders, p);
    if (nders >= 1) {
        double aw[2][kMaxDegree + 1];
        for (int r = 0; r <= p; ++r) {
            int s1 = 0, s2 = 1;
            aw[0][0] = 1.0;
            for (int k = 1; k <= kmax; ++k) {
                double dd = 0.0;
                const int rk = r - k;
                const int pk = p - k;
                if (r >= k) {
                    aw[s2][0] = aw[s1][0] / ndu[pk + 1][rk];
                    dd = aw[s2][0] * ndu[rk][pk];
                }
                const int j1 = (rk >= -1) ? 1 : -rk;
                const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
                for (int j = j1; j <= j2; ++j) {
                    aw[s2][j] = (aw[s1][j] - aw[s1][j - 1]) / ndu[pk + 1][rk + j];
                    dd += aw[s2][j] * ndu[rk + j][pk];
                }
                if (r <= pk) {
                    aw[s2][k] = -aw[s1][k - 1] / ndu[pk + 1][r];
                    dd += aw[s2][k] * ndu[r][pk];
                }
                out[k * (p + 1) + r] = dd;
                std::swap(s1, s2);
            }
        }
        double f = p;
        for (int k = 1; k <= kmax; ++k) {
            for (int t = 0; t <= p; ++t) out[k * (p + 1) + t] *= f;
            f *= double(p - k);
        }
        // derivative orders beyond the degree vanish identically
        for (int k = p + 1; k <= nders; ++k)
            for (int t = 0; t <= p; ++t) out[k * (p + 1) + t] = 0.0;
    }
    return c;
}

IndexSpan KnotVector::support(int basis) const {
    if (periodic()) return {basis - degree_, basis};
    return {std::max(0, basis - degree_), std::min(cells_ - 1, basis)};
}

IndexSpan KnotVector::basis_on_cells(int cell_lo, int cell_hi) const {
    if (periodic()) {
        const int hi = std::min(cell_hi + degree_, cell_lo + cells_ - 1);
        return {cell_lo, hi};
    }
    return {std::max(0, cell_lo), std::min(cells_ + degree_ - 1, cell_hi + degree_)};
}

std::vector<std::pair<int, double>> KnotVector::two_scale(int basis) const {
    const int p = degree_;
    std::vector<std::pair<int, double>> out;
    out.reserve(p + 2);
    if (periodic()) {
        // uniform dyadic mask: B_i = 2^-p sum_j C(p+1, j) B^fine_{2i - p + j}
        const double scale = std::ldexp(1.0, -p);
        double binom = 1.0;
        for (int j = 0; j <= p + 1; ++j) {
            out.push_back({2 * basis - p + j, scale * binom});
            binom = binom * double(p + 1 - j) / double(j + 1);
        }
        return out;
    }
    // clamped: Oslo recursion for the discrete B-spline alpha_{basis,p}(K)
    const KnotVector fine = refined();
    const int k_lo = std::max(0, 2 * basis - p - 2);
    const int k_hi = std::min(fine.dimension() - 1, 2 * basis + p + 2);
    for (int K = k_lo; K <= k_hi; ++K) {
        double alpha[kMaxDegree + 2];
        const double tK = fine.knot(K);
        for (int m = 0; m <= p; ++m) {
            const int jm = basis + m;
            alpha[m] = (knot(jm) <= tK && tK < knot(jm + 1)) ? 1.0 : 0.0;
        }
        for (int r = 1; r <= p; ++r) {
            const double tKr = fine.knot(K + r);
            for (int m = 0; m + r <= p; ++m) {
                const int jm = basis + m;
                const double d1 = knot(jm + r) - knot(jm);
                const double d2 = knot(jm + r + 1) - knot(jm + 1);
                double v = 0.0;
                if (d1 > 0.0) v += (tKr - knot(jm)) / d1 * alpha[m];
                if (d2 > 0.0) v += (knot(jm + r + 1) - tKr) / d2 * alpha[m + 1];
                alpha[m] = v;
            }
        }
        if (alpha[0] != 0.0) out.push_back({K, alpha[0]});
    }
    return out;
}

double KnotVector::greville(int basis) const {
    double s = 0.0;
    for (int j = 1; j <= degree_; ++j) s += knot(basis + j);
    return s / degree_;
}

TensorSpace::TensorSpace(int level, KnotVector u, KnotVector v)
    : level_(level), u_(std::move(u)), v_(std::move(v)) {
    if (v_.periodic())
        throw std::invalid_argument("TensorSpace: only the u direction may be periodic");
}

Box2 TensorSpace::cell_box(Index2 cell) const {
    return {u_.a() + cell.i * u_.spacing(), u_.a() + (cell.i + 1) * u_.spacing(),
            v_.a() + cell.j * v_.spacing(), v_.a() + (cell.j + 1) * v_.spacing()};
}

void TensorSpace::eval_nonzero(Vec2 p, int du, int dv,
                               std::vector<std::pair<Index2, double>>& out) const {
    const int n1 = u_.degree() + 1;
    const int n2 = v_.degree() + 1;
    double bu[3 * (kMaxDegree + 1)], bv[3 * (kMaxDegree + 1)];
    const int fu = u_.nonzero_basis(u_.wrap(p.u), du, bu);
    const int fv = v_.nonzero_basis(p.v, dv, bv);
    const double* ru = bu + du * n1;
    const double* rv = bv + dv * n2;
    out.clear();
    out.reserve(std::size_t(n1) * n2);
    for (int s = 0; s < n1; ++s)
        for (int t = 0; t < n2; ++t)
            out.push_back({{u_.wrap_index(fu + s), fv + t}, ru[s] * rv[t]});
}

void TensorSpace::support_spans(Index2 J, IndexSpan& su, IndexSpan& sv) const {
    su = u_.support(J.i);
    sv = v_.support(J.j);
}

std::vector<Index2> TensorSpace::support_cells(Index2 J) const {
    IndexSpan su, sv;
    support_spans(J, su, sv);
    std::vector<Index2> cells;
    cells.reserve(std::size_t(su.count()) * sv.count());
    for (int i = su.lo; i <= su.hi; ++i)
        for (int j = sv.lo; j <= sv.hi; ++j)
            cells.push_back({u_.wrap_index(i), j});
    return cells;
}

Box2 TensorSpace::support_box(Index2 J) const {
    IndexSpan su, sv;
    support_spans(J, su, sv);
    return {u_.a() + su.lo * u_.spacing(), u_.a() + (su.hi + 1) * u_.spacing(),
            v_.a() + sv.lo * v_.spacing(), v_.a() + (sv.hi + 1) * v_.spacing()};
}

void TensorSpace::two_scale(Index2 J, std::vector<std::pair<Index2, double>>& out) const {
    const auto wu = u_.two_scale(J.i);
    const auto wv = v_.two_scale(J.j);
    const KnotVector fine_u = u_.refined();
    out.clear();
    out.reserve(wu.size() * wv.size());
    for (const auto& [ku, au] : wu)
        for (const auto& [kv, av] : wv)
            out.push_back({{fine_u.wrap_index(ku), kv}, au * av});
}

TensorSpace make_root_space(int degree_u, int degree_v, int m1, int m2,
                            const Box2& domain, bool periodic_u) {
    return TensorSpace(
        0,
        KnotVector(degree_u, domain.u0, domain.u1, m1,
                   periodic_u ? Boundary::Periodic : Boundary::Clamped),
        KnotVector(degree_v, domain.v0, domain.v1, m2, Boundary::Clamped));
}

}  // namespace thb
