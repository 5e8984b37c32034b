#include "thb/adaptive_fit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include "thb/parallel.hpp"

namespace thb {

void FitConfig::validate() const {
    local.validate();
    if (degree_u < 1 || degree_u > 4 || degree_v < 1 || degree_v > 4)
        throw std::invalid_argument("degrees must be in [1, 4]");
    if (grid_u < 1 || grid_v < 1)
        throw std::invalid_argument("initial grid must have at least one cell per direction");
    if (periodic_u && grid_u < degree_u + 1)
        throw std::invalid_argument("periodic u needs grid_u >= degree_u + 1");
    if (!(domain.u1 > domain.u0) || !(domain.v1 > domain.v0))
        throw std::invalid_argument("empty parametric domain");
    if (!(epsilon > 0.0))
        throw std::invalid_argument("epsilon must be positive");
    if (!(eta > 0.0 && eta <= 1.0))
        throw std::invalid_argument("eta must be in (0, 1]");
    if (max_levels < 1)
        throw std::invalid_argument("max_levels must be at least 1");
    if (n_loc < 3)
        throw std::invalid_argument("n_loc must be at least 3");
    if (n_loc < local.n_min)
        throw std::invalid_argument("n_loc must be at least n_min");
    if (n1 < 1 || n2 < 1)
        throw std::invalid_argument("n1 and n2 must be positive");
}

const char* to_string(Termination t) {
    switch (t) {
        case Termination::Converged: return "converged";
        case Termination::LevelCap: return "level-cap";
        case Termination::NoCellsMarked: return "no-cells-marked";
    }
    return "unknown";
}

HierarchicalSurface::HierarchicalSurface(HierarchicalMesh mesh)
    : mesh_(std::move(mesh)), active_(compute_active_indices(mesh_)) {}

void HierarchicalSurface::set_coefficient(const LevelIndex& key, const Vec3& value) {
    coeffs_[key] = value;
    finalized_ = false;
}

std::vector<LevelIndex> HierarchicalSurface::missing_coefficients() const {
    std::vector<LevelIndex> missing;
    for (int l = 0; l < int(active_.per_level.size()); ++l)
        for (const Index2& J : active_.per_level[l])
            if (!coeffs_.count({l, J})) missing.push_back({l, J});
    return missing;
}

void HierarchicalSurface::finalize(int threads) {
    // the coefficient and truncation maps are keyed exactly by the active set
    for (auto it = coeffs_.begin(); it != coeffs_.end();)
        it = active_.contains(it->first) ? std::next(it) : coeffs_.erase(it);
    for (auto it = thb_.begin(); it != thb_.end();)
        it = active_.contains(it->first) ? std::next(it) : thb_.erase(it);

    std::vector<LevelIndex> missing;
    for (int l = 0; l < int(active_.per_level.size()); ++l)
        for (const Index2& J : active_.per_level[l]) {
            const LevelIndex key{l, J};
            if (!coeffs_.count(key))
                throw std::logic_error("finalize: coefficient missing for level " +
                                       std::to_string(l));
            if (!thb_.count(key)) missing.push_back(key);
        }
    std::vector<ThbFunction> built(missing.size());
    parallel_for(long(missing.size()), threads,
                 [&](long i) { built[i] = truncate(mesh_, missing[i]); });
    for (std::size_t i = 0; i < missing.size(); ++i)
        thb_.emplace(missing[i], std::move(built[i]));

    tables_.assign(mesh_.num_levels(), {});
    for (const auto& [key, lam] : coeffs_) {
        const ThbFunction& f = thb_.at(key);
        for (std::size_t k = 0; k < f.levels.size(); ++k)
            for (const auto& [K, sigma] : f.levels[k])
                tables_[key.level + int(k)][K] += lam * sigma;
    }
    finalized_ = true;
}

Vec3 HierarchicalSurface::eval(Vec2 p) const {
    if (!finalized_)
        throw std::logic_error("HierarchicalSurface: eval before finalize");
    thread_local std::vector<std::pair<Index2, double>> nz;
    Vec3 s;
    for (int l = 0; l < int(tables_.size()); ++l) {
        const auto& table = tables_[l];
        if (table.empty()) continue;
        mesh_.space(l).eval_nonzero(p, 0, 0, nz);
        for (const auto& [K, val] : nz) {
            auto it = table.find(K);
            if (it != table.end()) s += it->second * val;
        }
    }
    return s;
}

namespace {

// does the level-`key.level` support box reach into the marked cell?
bool support_overlaps_cell(const HierarchicalMesh& mesh, const LevelIndex& key,
                           const CellRef& m) {
    if (m.level < key.level) return false;  // only finer subdomains changed
    const TensorSpace& sp = mesh.space(key.level);
    IndexSpan su, sv;
    sp.support_spans(key.index, su, sv);
    const int shift = m.level - key.level;
    const long lo_u = long(su.lo) << shift;
    const long cnt_u = long(su.count()) << shift;
    bool u_hit;
    if (sp.u().periodic()) {
        const long n = long(mesh.space(m.level).u().cells());
        long off = (m.cell.i - lo_u) % n;
        if (off < 0) off += n;
        u_hit = cnt_u >= n || off < cnt_u;
    } else {
        u_hit = m.cell.i >= lo_u && m.cell.i < lo_u + cnt_u;
    }
    const long lo_v = long(sv.lo) << shift;
    const long cnt_v = long(sv.count()) << shift;
    return u_hit && m.cell.j >= lo_v && m.cell.j < lo_v + cnt_v;
}

}  // namespace

HierarchicalSurface HierarchicalSurface::refined(std::span<const CellRef> marked) const {
    HierarchicalSurface out(mesh_.refined(marked));
    for (int l = 0; l < int(out.active_.per_level.size()); ++l)
        for (const Index2& J : out.active_.per_level[l]) {
            const LevelIndex key{l, J};
            auto it = coeffs_.find(key);
            if (it != coeffs_.end()) out.coeffs_.emplace(key, it->second);
        }
    // truncations survive unless the support meets a newly refined cell
    for (const auto& [key, f] : thb_) {
        if (!out.active_.contains(key)) continue;
        bool invalidated = false;
        for (const CellRef& m : marked)
            if (support_overlaps_cell(mesh_, key, m)) {
                invalidated = true;
                break;
            }
        if (!invalidated) out.thb_.emplace(key, f);
    }
    return out;
}

const ThbFunction& HierarchicalSurface::truncation(const LevelIndex& key) const {
    auto it = thb_.find(key);
    if (it == thb_.end())
        throw std::invalid_argument("truncation: function is not active/finalized");
    return it->second;
}

const LevelBuckets& BucketCache::get(const TensorSpace& space) {
    auto it = by_level_.find(space.level());
    if (it == by_level_.end())
        it = by_level_.emplace(space.level(), LevelBuckets(space, *cloud_)).first;
    return it->second;
}

std::vector<double> evaluate_errors(const HierarchicalSurface& surface,
                                    const PointCloud& cloud, int threads) {
    std::vector<double> errors(cloud.size());
    parallel_for(long(cloud.size()), threads, [&](long i) {
        errors[i] = (surface.eval(cloud.params[i]) - cloud.points[i]).norm();
    });
    return errors;
}

std::vector<CellRef> mark_cells(const HierarchicalSurface& surface,
                                const PointCloud& cloud,
                                std::span<const double> errors,
                                const FitConfig& config, BucketCache& buckets) {
    const HierarchicalMesh& mesh = surface.mesh();
    const int threshold =
        (config.n_loc + config.n1 * config.n2 - 1) / (config.n1 * config.n2);
    std::set<CellRef> marked;
    std::vector<int> counts(std::size_t(config.n1) * config.n2);

    for (int l = 0; l < mesh.num_levels(); ++l) {
        const TensorSpace& sp = mesh.space(l);
        const LevelBuckets& bk = buckets.get(sp);
        const double hu = sp.u().spacing();
        for (const Index2& J : surface.active().per_level[l]) {
            IndexSpan su, sv;
            sp.support_spans(J, su, sv);
            const double u0 = sp.u().a() + su.lo * hu;
            const double width = su.count() * hu;
            const double v0 = sp.v().a() + sv.lo * sp.v().spacing();
            const double height = sv.count() * sp.v().spacing();

            bool offending = false;
            std::fill(counts.begin(), counts.end(), 0);
            for (int ci = su.lo; ci <= su.hi; ++ci) {
                const int wi = sp.u().wrap_index(ci);
                for (int cj = sv.lo; cj <= sv.hi; ++cj) {
                    for (int id : bk.cell({wi, cj})) {
                        if (errors[id] > config.epsilon) offending = true;
                        // site attribution is half-open with the last
                        // subrectangle closed; periodic u unwrapped onto the
                        // support box first
                        double uu = cloud.params[id].u;
                        if (sp.u().periodic()) uu = sp.u().wrap(uu) + double(ci - wi) * hu;
                        const int s1 = std::min(config.n1 - 1,
                                                int(config.n1 * (uu - u0) / width));
                        const int s2 = std::min(
                            config.n2 - 1,
                            int(config.n2 * (cloud.params[id].v - v0) / height));
                        ++counts[std::size_t(s1) * config.n2 + s2];
                    }
                }
            }
            if (!offending) continue;
            if (*std::min_element(counts.begin(), counts.end()) < threshold) continue;
            for (int ci = su.lo; ci <= su.hi; ++ci) {
                const int wi = sp.u().wrap_index(ci);
                for (int cj = sv.lo; cj <= sv.hi; ++cj)
                    if (mesh.is_active(l, {wi, cj})) marked.insert({l, {wi, cj}});
            }
        }
    }
    return {marked.begin(), marked.end()};
}

std::vector<CellRef> mark_cells(const HierarchicalSurface& surface,
                                const PointCloud& cloud,
                                std::span<const double> errors,
                                const FitConfig& config) {
    BucketCache buckets(cloud);
    return mark_cells(surface, cloud, errors, config, buckets);
}

namespace {

IterationStats make_stats(const HierarchicalSurface& surface,
                          std::span<const double> errors, double epsilon, long marked,
                          double wall_s) {
    long within = 0;
    double mx = 0.0;
    for (double e : errors) {
        if (e <= epsilon) ++within;
        mx = std::max(mx, e);
    }
    return {surface.mesh().num_levels(), surface.active().total(),
            double(within) / double(errors.size()), mx, marked, wall_s};
}

}  // namespace

std::pair<HierarchicalSurface, FitReport> fit(PointCloud cloud, const FitConfig& config,
                                              const FitObserver& observer) {
    config.validate();
    cloud.validate(config.domain, config.periodic_u);

    FitReport report;
    report.bbox_diagonal = cloud.bbox_diagonal();
    BucketCache buckets(cloud);

    auto stage_one = [&](HierarchicalSurface& surf) {
        const std::vector<LevelIndex> missing = surf.missing_coefficients();
        for (const LevelIndex& key : missing) buckets.get(surf.mesh().space(key.level));
        std::vector<LocalProblem> problems(missing.size());
        std::vector<LocalSolveResult> results(missing.size());
        parallel_for(long(missing.size()), config.threads, [&](long i) {
            const TensorSpace& sp = surf.mesh().space(missing[i].level);
            problems[i] =
                gather_local_data(cloud, sp, buckets.get(sp), missing[i], config.local);
            results[i] = solve_local(problems[i], cloud, sp, config.local);
        });
        for (std::size_t i = 0; i < missing.size(); ++i) {
            surf.set_coefficient(missing[i], results[i].lambda);
            report.local_fits.push_back({missing[i], problems[i].num_points(),
                                         problems[i].rings_n_min,
                                         problems[i].rings_density, problems[i].starved,
                                         results[i].mean_fallback,
                                         results[i].factorization_failed});
        }
    };

    using clock = std::chrono::steady_clock;
    auto seconds_since = [](clock::time_point t0) {
        return std::chrono::duration<double>(clock::now() - t0).count();
    };

    HierarchicalSurface surface(HierarchicalMesh(
        make_root_space(config.degree_u, config.degree_v, config.grid_u, config.grid_v,
                        config.domain, config.periodic_u)));

    auto t0 = clock::now();
    stage_one(surface);
    surface.finalize(config.threads);
    std::vector<double> errors = evaluate_errors(surface, cloud, config.threads);
    report.iterations.push_back(
        make_stats(surface, errors, config.epsilon, 0, seconds_since(t0)));
    if (observer) observer(0, surface, errors);

    for (int iter = 1;; ++iter) {
        if (report.iterations.back().within_fraction >= config.eta) {
            report.termination = Termination::Converged;
            break;
        }
        std::vector<CellRef> marks = mark_cells(surface, cloud, errors, config, buckets);
        bool capped = false;
        if (surface.mesh().num_levels() >= config.max_levels) {
            // refining finest-level cells would exceed the level cap
            const int finest = surface.mesh().num_levels() - 1;
            auto keep = std::remove_if(marks.begin(), marks.end(),
                                       [&](const CellRef& c) { return c.level == finest; });
            capped = keep != marks.end();
            marks.erase(keep, marks.end());
        }
        if (marks.empty()) {
            report.termination =
                capped ? Termination::LevelCap : Termination::NoCellsMarked;
            break;
        }
        t0 = clock::now();
        surface = surface.refined(marks);
        stage_one(surface);
        surface.finalize(config.threads);
        errors = evaluate_errors(surface, cloud, config.threads);
        report.iterations.push_back(make_stats(surface, errors, config.epsilon,
                                               long(marks.size()), seconds_since(t0)));
        if (observer) observer(iter, surface, errors);
    }
    report.final_errors = std::move(errors);
    return {std::move(surface), std::move(report)};
}

}  // namespace thb
