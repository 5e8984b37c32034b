#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>

#include "thb/adaptive_fit.hpp"
#include "thb/oracle.hpp"
#include "thb/synth.hpp"
#include "test_util.hpp"

using namespace thb;
using testutil::uniform;

namespace {

HierarchicalSurface make_surface(HierarchicalMesh mesh,
                                 const std::function<Vec3(LevelIndex)>& coeff) {
    HierarchicalSurface s(std::move(mesh));
    for (const LevelIndex& key : s.missing_coefficients()) s.set_coefficient(key, coeff(key));
    s.finalize();
    return s;
}

PointCloud sample_surface(std::mt19937_64& g, const HierarchicalSurface& s, long n) {
    PointCloud cloud;
    const Box2 dom = s.mesh().space(0).domain();
    for (long i = 0; i < n; ++i) {
        const Vec2 p = testutil::random_point(g, dom);
        cloud.params.push_back(p);
        cloud.points.push_back(s.eval(p));
    }
    return cloud;
}

FitConfig ridge_config() {
    FitConfig cfg;
    cfg.degree_u = cfg.degree_v = 2;
    cfg.grid_u = cfg.grid_v = 4;
    cfg.epsilon = 5e-3;
    cfg.eta = 0.95;
    cfg.max_levels = 5;
    cfg.n_loc = 12;
    cfg.local.n_min = 8;
    return cfg;
}

}  // namespace

TEST_CASE("evaluate_errors") {
    auto g = testutil::rng(71);
    HierarchicalMesh mesh = testutil::nested_corner_mesh(
        make_root_space(2, 2, 4, 4, {0, 1, 0, 1}, false), 1);
    SUBCASE("residual of the surface itself is zero") {
        const HierarchicalSurface s = make_surface(mesh, [](LevelIndex key) {
            return Vec3{double(key.index.i), double(key.index.j), double(key.level) + 1.0};
        });
        const PointCloud cloud = sample_surface(g, s, 500);
        double fmax = 0.0;
        for (const Vec3& f : cloud.points) fmax = std::max(fmax, f.max_abs());
        for (const double e : evaluate_errors(s, cloud))
            CHECK(e <= 1e-12 * (1.0 + fmax));
    }
    SUBCASE("3-4-5 residual") {
        const HierarchicalSurface zero =
            make_surface(mesh, [](LevelIndex) { return Vec3{}; });
        PointCloud cloud;
        cloud.params.push_back({0.5, 0.5});
        cloud.points.push_back({3.0, 4.0, 0.0});
        const auto errors = evaluate_errors(zero, cloud);
        CHECK(errors[0] == doctest::Approx(5.0).epsilon(1e-15));
    }
    SUBCASE("agreement with the dense re-evaluation oracle") {
        const HierarchicalSurface s = make_surface(mesh, [&](LevelIndex key) {
            return Vec3{uniform(g, -1, 1), uniform(g, -1, 1),
                        double(key.level) + 0.1 * key.index.i};
        });
        const PointCloud cloud = sample_surface(g, s, 40);
        // independent evaluation: dense finest-level expansion per function
        const TensorSpace& finest = s.mesh().space(s.mesh().num_levels() - 1);
        std::vector<std::pair<Vec3, Eigen::VectorXd>> expanded;
        for (int l = 0; l < s.mesh().num_levels(); ++l)
            for (const Index2& J : s.active().per_level[l])
                expanded.push_back({s.coefficients().at({l, J}),
                                    oracle::thb_finest_expansion(s.mesh(), {l, J})});
        const auto errors = evaluate_errors(s, cloud);
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            Vec3 val{};
            for (const auto& [lam, dense] : expanded)
                val += lam * oracle::eval_dense(finest, dense, cloud.params[i]);
            const double e = (val - cloud.points[i]).norm();
            CHECK(errors[i] == doctest::Approx(e).epsilon(1e-10));
            CHECK(std::abs(errors[i] - e) <= 1e-14 * (1.0 + e));
        }
    }
}

TEST_CASE("mark_cells") {
    auto g = testutil::rng(83);
    FitConfig cfg = ridge_config();

    SUBCASE("no offending site, no marks") {
        const HierarchicalSurface s = make_surface(
            HierarchicalMesh(make_root_space(2, 2, 4, 4, {0, 1, 0, 1}, false)),
            [](LevelIndex) { return Vec3{}; });
        PointCloud cloud;
        for (int k = 0; k < 100; ++k) {
            cloud.params.push_back(testutil::random_point(g, {0, 1, 0, 1}));
            cloud.points.push_back({0, 0, 0});
        }
        const std::vector<double> errors(cloud.size(), 0.0);
        CHECK(mark_cells(s, cloud, errors, cfg).empty());
    }

    SUBCASE("one offending site marks the supports that hold it") {
        const HierarchicalSurface s = make_surface(
            HierarchicalMesh(make_root_space(2, 2, 4, 4, {0, 1, 0, 1}, false)),
            [](LevelIndex) { return Vec3{}; });
        PointCloud cloud;
        for (int k = 0; k < 600; ++k) {
            cloud.params.push_back(testutil::random_point(g, {0, 1, 0, 1}));
            cloud.points.push_back({0, 0, 0});
        }
        std::vector<double> errors(cloud.size(), 0.0);
        cloud.params[0] = {0.53, 0.47};
        errors[0] = 10.0 * cfg.epsilon;
        const auto marked = mark_cells(s, cloud, errors, cfg);
        CHECK(!marked.empty());
        // the cell holding the site is inside every qualifying support
        bool holds_site = false;
        for (const CellRef& c : marked)
            if (c.level == 0 && c.cell == Index2{2, 1}) holds_site = true;
        CHECK(holds_site);
        // equivalence with the brute-force double loop
        CHECK(marked == oracle::mark_cells_bruteforce(s, cloud, errors, cfg));
    }

    SUBCASE("an empty support subrectangle disqualifies the mother") {
        const HierarchicalSurface s = make_surface(
            HierarchicalMesh(make_root_space(2, 2, 4, 4, {0, 1, 0, 1}, false)),
            [](LevelIndex) { return Vec3{}; });
        // data only in the lower-left quarter of cell (0,0): every mother
        // whose support holds the offending site has an empty subrectangle
        PointCloud cloud;
        for (int k = 0; k < 200; ++k) {
            cloud.params.push_back({uniform(g, 0.0, 0.124), uniform(g, 0.0, 0.124)});
            cloud.points.push_back({0, 0, 0});
        }
        std::vector<double> errors(cloud.size(), 0.0);
        errors[7] = 1.0;
        FitConfig quad = cfg;
        quad.n1 = quad.n2 = 2;
        quad.n_loc = 8;
        CHECK(mark_cells(s, cloud, errors, quad).empty());
        CHECK(oracle::mark_cells_bruteforce(s, cloud, errors, quad).empty());
        // without the subrectangle requirement the same scenario marks
        FitConfig plain = cfg;
        plain.n_loc = 8;
        CHECK(!mark_cells(s, cloud, errors, plain).empty());
    }

    SUBCASE("equivalence with the brute-force marker on a refined mesh") {
        for (const bool periodic : {false, true}) {
            HierarchicalMesh mesh = testutil::nested_corner_mesh(
                make_root_space(2, 2, periodic ? 6 : 4, 4, {0, 1, 0, 1}, periodic), 2);
            const HierarchicalSurface s =
                make_surface(std::move(mesh), [](LevelIndex) { return Vec3{}; });
            PointCloud cloud;
            for (int k = 0; k < 3000; ++k) {
                cloud.params.push_back(testutil::random_point(g, {0, 1, 0, 1}));
                cloud.points.push_back({0, 0, 0});
            }
            std::vector<double> errors(cloud.size(), 0.0);
            for (int k = 0; k < 40; ++k) errors[std::size_t(g() % errors.size())] = 1.0;
            FitConfig c2 = cfg;
            c2.n1 = 2;
            c2.n2 = 2;
            c2.periodic_u = periodic;
            for (const FitConfig& c : {cfg, c2}) {
                BucketCache buckets(cloud);
                CHECK(mark_cells(s, cloud, errors, c, buckets) ==
                      oracle::mark_cells_bruteforce(s, cloud, errors, c));
            }
        }
    }
}

TEST_CASE("fit terminates immediately on plane-reproducible data") {
    auto g = testutil::rng(97);
    PointCloud cloud;
    for (int k = 0; k < 2000; ++k) {
        const Vec2 p = testutil::random_point(g, {0, 1, 0, 1});
        cloud.params.push_back(p);
        cloud.points.push_back({p.u, p.v, 0.4 * p.u - 0.7 * p.v + 0.2});
    }
    FitConfig cfg;
    cfg.degree_u = cfg.degree_v = 2;
    cfg.grid_u = cfg.grid_v = 8;
    cfg.epsilon = 1e-8;
    cfg.n_loc = 12;
    cfg.local.n_min = 9;
    const auto [surface, report] = fit(cloud, cfg);
    CHECK(report.termination == Termination::Converged);
    CHECK(report.iterations.size() == 1);
    CHECK(report.iterations[0].levels == 1);
    CHECK(report.iterations[0].within_fraction == 1.0);
    CHECK(surface.mesh().num_levels() == 1);
}

TEST_CASE("level cap: one stage-one pass when max_levels is 1") {
    const auto ridge = synth::generate({synth::Shape::Ridge, 3000, 0.0, 0, 0.0, 5});
    FitConfig cfg = ridge_config();
    cfg.epsilon = 1e-5;  // unreachable on the coarse grid
    cfg.max_levels = 1;
    const auto [surface, report] = fit(ridge.cloud, cfg);
    CHECK(report.termination == Termination::LevelCap);
    CHECK(report.iterations.size() == 1);
    CHECK(surface.mesh().num_levels() == 1);
}

TEST_CASE("adaptive refinement on the ridge: economy, persistence, determinism") {
    const auto ridge = synth::generate({synth::Shape::Ridge, 6000, 0.0, 0, 0.0, 7});
    FitConfig cfg = ridge_config();

    // observer records coefficients per iteration
    std::vector<std::map<LevelIndex, Vec3>> snapshots;
    std::vector<long> dofs;
    const auto observer = [&](int, const HierarchicalSurface& s,
                              std::span<const double>) {
        snapshots.push_back(s.coefficients());
        dofs.push_back(s.active().total());
    };
    const auto [surface, report] = fit(ridge.cloud, cfg, observer);

    CHECK(report.termination == Termination::Converged);
    CHECK(report.iterations.back().within_fraction >= cfg.eta);
    CHECK(report.iterations.size() <= std::size_t(cfg.max_levels) + 1);
    CHECK(surface.mesh().num_levels() > 1);
    oracle::verify_mesh_invariants(surface.mesh());

    // report self-consistency: recomputing the final metrics reproduces the
    // last iteration row
    const auto errors = evaluate_errors(surface, ridge.cloud);
    long within = 0;
    double mx = 0.0;
    for (double e : errors) {
        if (e <= cfg.epsilon) ++within;
        mx = std::max(mx, e);
    }
    CHECK(report.iterations.back().within_fraction ==
          double(within) / double(errors.size()));
    CHECK(report.iterations.back().max_error == mx);
    REQUIRE(report.final_errors.size() == errors.size());
    for (std::size_t i = 0; i < errors.size(); ++i)
        CHECK(report.final_errors[i] == errors[i]);

    // monotone DOF and bit-identical surviving coefficients
    for (std::size_t it = 1; it < snapshots.size(); ++it) {
        CHECK(dofs[it] >= dofs[it - 1]);
        for (const auto& [key, lam] : snapshots[it - 1]) {
            const auto found = snapshots[it].find(key);
            if (found != snapshots[it].end()) {
                CHECK(found->second.x == lam.x);
                CHECK(found->second.y == lam.y);
                CHECK(found->second.z == lam.z);
            }
        }
    }

    // the refinement concentrated: fewer DOF than the uniform space that
    // reaches the same tolerance fraction
    FitConfig base_cfg = cfg;
    base_cfg.max_levels = surface.mesh().num_levels();
    const auto baseline = oracle::uniform_baseline(ridge.cloud, base_cfg);
    bool baseline_reached = false;
    for (const auto& lvl : baseline)
        if (lvl.within_fraction >= cfg.eta) {
            baseline_reached = true;
            CHECK(report.iterations.back().dof < lvl.dof);
            break;
        }
    CHECK(baseline_reached);

    // determinism across thread counts
    FitConfig threaded = cfg;
    threaded.threads = 8;
    const auto [surface8, report8] = fit(ridge.cloud, threaded, {});
    REQUIRE(report8.iterations.size() == report.iterations.size());
    for (std::size_t i = 0; i < report.iterations.size(); ++i) {
        CHECK(report8.iterations[i].dof == report.iterations[i].dof);
        CHECK(report8.iterations[i].within_fraction ==
              report.iterations[i].within_fraction);
        CHECK(report8.iterations[i].max_error == report.iterations[i].max_error);
    }
    REQUIRE(surface8.coefficients().size() == surface.coefficients().size());
    for (const auto& [key, lam] : surface.coefficients()) {
        const Vec3 other = surface8.coefficients().at(key);
        CHECK(other.x == lam.x);
        CHECK(other.y == lam.y);
        CHECK(other.z == lam.z);
    }
}

TEST_CASE("config and input validation") {
    FitConfig cfg = ridge_config();
    PointCloud cloud;
    cloud.params.push_back({0.5, 0.5});
    cloud.points.push_back({0, 0, 0});

    FitConfig bad = cfg;
    bad.epsilon = 0.0;
    CHECK_THROWS_AS((void)fit(cloud, bad), std::invalid_argument);
    bad = cfg;
    bad.n_loc = bad.local.n_min - 1;
    CHECK_THROWS_AS((void)fit(cloud, bad), std::invalid_argument);
    bad = cfg;
    bad.eta = 1.5;
    CHECK_THROWS_AS((void)fit(cloud, bad), std::invalid_argument);
    bad = cfg;
    bad.periodic_u = true;
    bad.grid_u = bad.degree_u;  // too narrow for a periodic direction
    CHECK_THROWS_AS((void)fit(cloud, bad), std::invalid_argument);

    CHECK_THROWS_AS((void)fit(PointCloud{}, cfg), std::invalid_argument);
    PointCloud outside = cloud;
    outside.params[0] = {0.5, 1.5};
    CHECK_THROWS_AS((void)fit(outside, cfg), std::invalid_argument);
}
