#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <string>

#include "thb/adaptive_fit.hpp"
#include "thb/io.hpp"
#include "thb/synth.hpp"

namespace {

int run_fit(const std::string& input, const std::string& config_path,
            const std::string& out_surface, const std::string& out_mesh,
            const std::string& out_report, int sample_grid, int threads) {
    thb::FitConfig config = thb::io::read_config_file(config_path);
    config.threads = threads;
    thb::PointCloud cloud = thb::io::read_cloud_file(input);

    auto [surface, report] = thb::fit(std::move(cloud), config);

    if (!out_surface.empty()) {
        std::ofstream out(out_surface);
        if (!out) throw thb::io::ParseError(out_surface + ": cannot open for writing");
        thb::io::write_surface_obj(out, surface, sample_grid);
    }
    if (!out_mesh.empty()) {
        std::ofstream out(out_mesh);
        if (!out) throw thb::io::ParseError(out_mesh + ": cannot open for writing");
        thb::io::write_mesh_dump(out, surface.mesh(), surface.active());
    }
    if (!out_report.empty()) {
        std::ofstream out(out_report);
        if (!out) throw thb::io::ParseError(out_report + ": cannot open for writing");
        thb::io::write_report(out, report);
    }

    const thb::IterationStats& last = report.iterations.back();
    std::cout << "termination: " << thb::to_string(report.termination)
              << "  levels: " << last.levels << "  dof: " << last.dof
              << "  within: " << last.within_fraction * 100.0 << "%"
              << "  max error: " << last.max_error << "\n";
    return report.termination == thb::Termination::Converged ? 0 : 2;
}

int run_synth(const std::string& shape_name, long n, double noise, int voids,
              double cluster, std::uint64_t seed, const std::string& out_path) {
    thb::synth::Spec spec;
    spec.shape = thb::synth::parse_shape(shape_name);
    spec.n = n;
    spec.noise = noise;
    spec.voids = voids;
    spec.cluster = cluster;
    spec.seed = seed;
    const thb::synth::Result res = thb::synth::generate(spec);

    std::vector<std::string> comments;
    comments.push_back("thb-fit synthetic cloud");
    comments.push_back("shape " + std::string(thb::synth::to_string(spec.shape)));
    comments.push_back("n " + std::to_string(spec.n));
    comments.push_back("noise " + thb::io::format_double(spec.noise));
    comments.push_back("seed " + std::to_string(spec.seed));
    if (res.periodic_u) comments.push_back("periodic_u 1");
    for (const thb::Box2& r : res.void_rects)
        comments.push_back("void " + thb::io::format_double(r.u0) + " " +
                           thb::io::format_double(r.u1) + " " +
                           thb::io::format_double(r.v0) + " " +
                           thb::io::format_double(r.v1));
    thb::io::write_cloud_file(out_path, res.cloud, comments);
    std::cout << "wrote " << res.cloud.size() << " points to " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage adaptive scattered-data fitting with THB-splines"};
    app.require_subcommand(1);

    auto* fit_cmd = app.add_subcommand("fit", "fit a point cloud and write the results");
    std::string input, config_path, out_surface, out_mesh, out_report;
    int sample_grid = 128;
    int threads = 1;
    std::uint64_t seed = 1;
    fit_cmd->add_option("--input", input, "cloud file (x y z u v per line)")->required();
    fit_cmd->add_option("--config", config_path, "fit configuration file")->required();
    fit_cmd->add_option("--out-surface", out_surface, "sampled surface (OBJ)");
    fit_cmd->add_option("--out-mesh", out_mesh, "hierarchical mesh dump");
    fit_cmd->add_option("--out-report", out_report, "per-iteration / per-point report");
    fit_cmd->add_option("--sample-grid", sample_grid, "surface sample grid size")
        ->default_val(128);
    fit_cmd->add_option("--seed", seed, "seed for stochastic modes (unused by fit)");
    fit_cmd->add_option("--threads", threads, "stage-one parallelism (0 = hardware)")
        ->default_val(1);

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic point cloud");
    std::string shape_name = "plane", out_path;
    long n = 1000;
    double noise = 0.0, cluster = 0.0;
    int voids = 0;
    synth_cmd->add_option("--shape", shape_name, "plane|ridge|peaks|cylinder-airfoil")
        ->default_val("plane");
    synth_cmd->add_option("--n", n, "number of points")->default_val(1000);
    synth_cmd->add_option("--noise", noise, "Gaussian noise sigma (meters)")
        ->default_val(0.0);
    synth_cmd->add_option("--voids", voids, "number of rectangular parameter holes")
        ->default_val(0);
    synth_cmd->add_option("--cluster", cluster, "density concentration factor")
        ->default_val(0.0);
    synth_cmd->add_option("--seed", seed, "random seed")->default_val(1);
    synth_cmd->add_option("--out", out_path, "output cloud file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(fit_cmd))
            return run_fit(input, config_path, out_surface, out_mesh, out_report,
                           sample_grid, threads);
        return run_synth(shape_name, n, noise, voids, cluster, seed, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
