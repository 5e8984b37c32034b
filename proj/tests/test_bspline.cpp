#include <doctest.h>

#include <cmath>
#include <set>

#include "thb/bspline.hpp"
#include "thb/oracle.hpp"
#include "test_util.hpp"

using namespace thb;
using testutil::uniform;

TEST_CASE("central quadratic basis value at span midpoint") {
    // uniform quadratic on [0,3]; basis 2 spans knots 0,1,2,3
    const KnotVector kv(2, 0.0, 3.0, 3, Boundary::Clamped);
    double vals[3];
    const int first = kv.nonzero_basis(1.5, 0, vals);
    REQUIRE(first == 1);
    CHECK(vals[1] == doctest::Approx(0.75).epsilon(1e-14));           // basis 2
    CHECK(oracle::naive_basis(kv, 2, 1.5) == doctest::Approx(0.75));  // same oracle
}

TEST_CASE("central cubic basis value at its support midpoint") {
    const KnotVector kv(3, 0.0, 4.0, 4, Boundary::Clamped);
    double vals[4];
    const int first = kv.nonzero_basis(2.0, 0, vals);
    const double v = vals[3 - first];  // basis 3
    CHECK(v == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(oracle::naive_basis(kv, 3, 2.0) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("values agree with the recursive evaluator") {
    auto g = testutil::rng(11);
    for (const Boundary bc : {Boundary::Clamped, Boundary::Periodic}) {
        for (int d = 1; d <= 4; ++d) {
            const KnotVector kv(d, -0.5, 2.5, 7, bc);
            for (int rep = 0; rep < 40; ++rep) {
                const double x = uniform(g, kv.a(), kv.b());
                double vals[5];
                const int first = kv.nonzero_basis(x, 0, vals);
                for (int t = 0; t <= d; ++t) {
                    const int i = kv.wrap_index(first + t);
                    CHECK(vals[t] ==
                          doctest::Approx(oracle::naive_basis(kv, i, x)).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("partition of unity at 1000 random points") {
    auto g = testutil::rng(7);
    for (const Boundary bc : {Boundary::Clamped, Boundary::Periodic}) {
        for (int d = 1; d <= 4; ++d) {
            const KnotVector kv(d, 0.0, 1.0, 8, bc);
            for (int rep = 0; rep < 1000 / 8; ++rep) {
                const double x = uniform(g, 0.0, 1.0);
                double vals[5];
                kv.nonzero_basis(x, 0, vals);
                double s = 0.0;
                for (int t = 0; t <= d; ++t) s += vals[t];
                CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
            }
        }
    }
    // tensor version, including the boundary
    const TensorSpace sp = make_root_space(2, 3, 5, 4, {0, 1, 0, 1}, false);
    std::vector<std::pair<Index2, double>> nz;
    for (const Vec2 p : {Vec2{0.0, 0.0}, Vec2{1.0, 1.0}, Vec2{0.31, 0.77}}) {
        sp.eval_nonzero(p, 0, 0, nz);
        CHECK(nz.size() == 3 * 4);
        double s = 0.0;
        for (const auto& [J, v] : nz) s += v;
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("point outside a clamped direction is a domain error") {
    const KnotVector kv(2, 0.0, 1.0, 4, Boundary::Clamped);
    double vals[3];
    CHECK_THROWS_AS(kv.nonzero_basis(1.0 + 1e-9, 0, vals), std::domain_error);
    CHECK_THROWS_AS(kv.nonzero_basis(-1e-9, 0, vals), std::domain_error);
    const TensorSpace sp = make_root_space(2, 2, 4, 4, {0, 1, 0, 1}, true);
    std::vector<std::pair<Index2, double>> nz;
    CHECK_NOTHROW(sp.eval_nonzero({1.4, 0.5}, 0, 0, nz));  // periodic u wraps
    CHECK_THROWS_AS(sp.eval_nonzero({0.5, 1.4}, 0, 0, nz), std::domain_error);
}

TEST_CASE("interior two-scale weights: binomial masks") {
    // degree 2: (1/4) {1, 3, 3, 1}
    const KnotVector kv2(2, 0.0, 8.0, 8, Boundary::Clamped);
    const auto w2 = kv2.two_scale(4);
    REQUIRE(w2.size() == 4);
    const double expect2[] = {0.25, 0.75, 0.75, 0.25};
    for (int k = 0; k < 4; ++k) {
        CHECK(w2[k].first == 2 * 4 - 2 + k);
        CHECK(w2[k].second == doctest::Approx(expect2[k]).epsilon(1e-14));
    }
    // degree 1: {1/2, 1, 1/2}
    const KnotVector kv1(1, 0.0, 8.0, 8, Boundary::Clamped);
    const auto w1 = kv1.two_scale(4);
    REQUIRE(w1.size() == 3);
    const double expect1[] = {0.5, 1.0, 0.5};
    for (int k = 0; k < 3; ++k)
        CHECK(w1[k].second == doctest::Approx(expect1[k]).epsilon(1e-14));
    // knot-insertion oracle agrees, including boundary functions
    for (int d = 1; d <= 4; ++d) {
        const KnotVector kv(d, 0.0, 1.0, 6, Boundary::Clamped);
        for (int basis = 0; basis < kv.dimension(); ++basis) {
            const auto impl = kv.two_scale(basis);
            const auto orac = oracle::subdivision_weights(kv, basis);
            REQUIRE(impl.size() == orac.size());
            for (std::size_t k = 0; k < impl.size(); ++k) {
                CHECK(impl[k].first == orac[k].first);
                CHECK(impl[k].second == doctest::Approx(orac[k].second).epsilon(1e-13));
            }
        }
    }
}

TEST_CASE("two-scale reproduces the coarse function everywhere") {
    auto g = testutil::rng(23);
    for (const Boundary bc : {Boundary::Clamped, Boundary::Periodic}) {
        for (int d = 1; d <= 4; ++d) {
            const KnotVector kv(d, 0.0, 2.0, 6, bc);
            const KnotVector fine = kv.refined();
            for (int basis = 0; basis < kv.dimension(); ++basis) {
                const auto w = kv.two_scale(basis);
                for (int rep = 0; rep < 50; ++rep) {
                    const double x = uniform(g, 0.0, 2.0);
                    double sum = 0.0;
                    for (const auto& [k, wk] : w)
                        sum += wk * oracle::naive_basis(fine, fine.wrap_index(k), x);
                    const double direct = oracle::naive_basis(kv, basis, x);
                    CHECK(std::abs(sum - direct) <= 1e-12);
                }
            }
        }
    }
}

TEST_CASE("support cells") {
    // interior bicubic: 4 x 4 cells
    const TensorSpace cubic = make_root_space(3, 3, 8, 8, {0, 1, 0, 1}, false);
    CHECK(cubic.support_cells({5, 5}).size() == 16);
    // clamped corner function of a biquadratic space: single cell
    const TensorSpace quad = make_root_space(2, 2, 4, 4, {0, 1, 0, 1}, false);
    const auto corner = quad.support_cells({0, 0});
    REQUIRE(corner.size() == 1);
    CHECK(corner[0] == Index2{0, 0});
    // periodic-u function straddling the seam: wrapped indices, 3 x 3 cells
    const TensorSpace per = make_root_space(2, 2, 6, 6, {0, 1, 0, 1}, true);
    const auto seam = per.support_cells({0, 2});  // support cells u in {4, 5, 0}
    CHECK(seam.size() == 9);
    std::set<int> us;
    for (const Index2& c : seam) us.insert(c.i);
    CHECK(us == std::set<int>{0, 4, 5});
    // enumeration oracle: nonzero at the midpoint of exactly the listed cells
    std::set<std::pair<int, int>> listed;
    for (const Index2& c : seam) listed.insert({c.i, c.j});
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            const Box2 cb = per.cell_box({i, j});
            const double mid_value = oracle::naive_basis2(
                per, {0, 2}, {0.5 * (cb.u0 + cb.u1), 0.5 * (cb.v0 + cb.v1)});
            CHECK((mid_value > 1e-14) == (listed.count({i, j}) > 0));
        }
}

TEST_CASE("second derivatives match central differences") {
    auto g = testutil::rng(31);
    const double h = 1e-5;
    for (const Boundary bc : {Boundary::Clamped, Boundary::Periodic}) {
        for (int d = 2; d <= 4; ++d) {
            const KnotVector kv(d, 0.0, 1.0, 8, bc);
            for (int rep = 0; rep < 30; ++rep) {
                // keep the stencil inside one span: derivatives jump at knots
                const int cell = int(g() % 8);
                const double x = kv.a() + (cell + uniform(g, 0.2, 0.8)) * kv.spacing();
                double v0[15], vm[15], vp[15];
                const int first = kv.nonzero_basis(x, 2, v0);
                kv.nonzero_basis(x - h, 2, vm);
                kv.nonzero_basis(x + h, 2, vp);
                for (int t = 0; t <= d; ++t) {
                    const double fd = (vp[t] - 2.0 * v0[t] + vm[t]) / (h * h);
                    const double an = v0[2 * (d + 1) + t];
                    const double scale = std::max(std::abs(an), std::abs(fd));
                    if (scale > 1e-6)
                        CHECK(std::abs(an - fd) <= 1e-5 * scale);
                }
                (void)first;
            }
        }
    }
}

TEST_CASE("local linear reproduction from Greville coefficients") {
    auto g = testutil::rng(41);
    for (const bool periodic : {false, true}) {
        const TensorSpace sp = make_root_space(3, 2, 6, 5, {0, 2, -1, 1}, periodic);
        std::vector<std::pair<Index2, double>> nz;
        for (int rep = 0; rep < 200; ++rep) {
            const Vec2 p = testutil::random_interior_point(g, sp.domain());
            // reconstruct 1, u and v from the active functions only, with
            // unwrapped Greville abscissae as coefficients
            double bu[4], bv[3];
            const int fu = sp.u().nonzero_basis(sp.u().wrap(p.u), 0, bu);
            const int fv = sp.v().nonzero_basis(p.v, 0, bv);
            double one = 0.0, lin_u = 0.0, lin_v = 0.0;
            for (int s = 0; s <= 3; ++s)
                for (int t = 0; t <= 2; ++t) {
                    const double w = bu[s] * bv[t];
                    one += w;
                    lin_u += sp.u().greville(fu + s) * w;
                    lin_v += sp.v().greville(fv + t) * w;
                }
            CHECK(one == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(lin_u == doctest::Approx(sp.u().wrap(p.u)).epsilon(1e-12));
            CHECK(lin_v == doctest::Approx(p.v).epsilon(1e-12));
        }
    }
}

TEST_CASE("knot vector validation") {
    CHECK_THROWS_AS(KnotVector(0, 0.0, 1.0, 4, Boundary::Clamped), std::invalid_argument);
    CHECK_THROWS_AS(KnotVector(5, 0.0, 1.0, 8, Boundary::Clamped), std::invalid_argument);
    CHECK_THROWS_AS(KnotVector(2, 0.0, 1.0, 0, Boundary::Clamped), std::invalid_argument);
    CHECK_THROWS_AS(KnotVector(1, 1.0, 1.0, 4, Boundary::Clamped), std::invalid_argument);
    CHECK_THROWS_AS(KnotVector(3, 0.0, 1.0, 3, Boundary::Periodic), std::invalid_argument);
    CHECK_NOTHROW(KnotVector(3, 0.0, 1.0, 4, Boundary::Periodic));
    // only u may be periodic
    CHECK_THROWS_AS(TensorSpace(0, KnotVector(2, 0.0, 1.0, 4, Boundary::Clamped),
                                KnotVector(2, 0.0, 1.0, 4, Boundary::Periodic)),
                    std::invalid_argument);
}

TEST_CASE("dimensions") {
    CHECK(KnotVector(3, 0.0, 1.0, 8, Boundary::Clamped).dimension() == 11);
    CHECK(KnotVector(3, 0.0, 1.0, 8, Boundary::Periodic).dimension() == 8);
    CHECK(make_root_space(2, 3, 4, 5, {0, 1, 0, 1}, false).dimension() == 6 * 8);
    CHECK(make_root_space(2, 3, 4, 5, {0, 1, 0, 1}, true).dimension() == 4 * 8);
}
