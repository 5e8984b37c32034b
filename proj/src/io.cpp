#include "thb/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace thb::io {

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace {

bool blank_or_comment(const std::string& line) {
    const auto pos = line.find_first_not_of(" \t\r");
    return pos == std::string::npos || line[pos] == '#';
}

std::optional<double> parse_number(std::string_view tok) {
    double value;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return value;
}

std::vector<std::string_view> split_ws(const std::string& line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r'))
            ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r')
            ++j;
        if (j > i) out.push_back(std::string_view(line).substr(i, j - i));
        i = j;
    }
    return out;
}

[[noreturn]] void fail(const std::string& name, long line_no, const std::string& what) {
    throw ParseError(name + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

PointCloud read_cloud(std::istream& in, const std::string& name) {
    PointCloud cloud;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank_or_comment(line)) continue;
        const auto toks = split_ws(line);
        if (toks.size() != 5)
            fail(name, line_no,
                 "expected 5 numeric fields (x y z u v), got " +
                     std::to_string(toks.size()));
        double vals[5];
        for (int k = 0; k < 5; ++k) {
            const auto v = parse_number(toks[k]);
            if (!v) fail(name, line_no, "bad number '" + std::string(toks[k]) + "'");
            vals[k] = *v;
        }
        cloud.points.push_back({vals[0], vals[1], vals[2]});
        cloud.params.push_back({vals[3], vals[4]});
    }
    if (in.bad()) throw ParseError(name + ": read failure");
    return cloud;
}

PointCloud read_cloud_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open for reading");
    return read_cloud(in, path);
}

void write_cloud(std::ostream& out, const PointCloud& cloud,
                 const std::vector<std::string>& header_comments) {
    for (const std::string& c : header_comments) out << "# " << c << "\n";
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& f = cloud.points[i];
        const Vec2& x = cloud.params[i];
        out << format_double(f.x) << ' ' << format_double(f.y) << ' '
            << format_double(f.z) << ' ' << format_double(x.u) << ' '
            << format_double(x.v) << '\n';
    }
}

void write_cloud_file(const std::string& path, const PointCloud& cloud,
                      const std::vector<std::string>& header_comments) {
    std::ofstream out(path);
    if (!out) throw ParseError(path + ": cannot open for writing");
    write_cloud(out, cloud, header_comments);
    if (!out) throw ParseError(path + ": write failure");
}

FitConfig parse_config(std::istream& in, const std::string& name) {
    FitConfig cfg;
    std::set<std::string> seen;

    const std::map<std::string, std::function<bool(double)>> setters = {
        {"degree_u", [&](double v) { cfg.degree_u = int(v); return v == int(v); }},
        {"degree_v", [&](double v) { cfg.degree_v = int(v); return v == int(v); }},
        {"grid_u", [&](double v) { cfg.grid_u = int(v); return v == int(v); }},
        {"grid_v", [&](double v) { cfg.grid_v = int(v); return v == int(v); }},
        {"periodic_u",
         [&](double v) { cfg.periodic_u = v != 0.0; return v == 0.0 || v == 1.0; }},
        {"domain_u_min", [&](double v) { cfg.domain.u0 = v; return true; }},
        {"domain_u_max", [&](double v) { cfg.domain.u1 = v; return true; }},
        {"domain_v_min", [&](double v) { cfg.domain.v0 = v; return true; }},
        {"domain_v_max", [&](double v) { cfg.domain.v1 = v; return true; }},
        {"epsilon", [&](double v) { cfg.epsilon = v; return true; }},
        {"eta", [&](double v) { cfg.eta = v; return true; }},
        {"max_levels", [&](double v) { cfg.max_levels = int(v); return v == int(v); }},
        {"n_loc", [&](double v) { cfg.n_loc = int(v); return v == int(v); }},
        {"n1", [&](double v) { cfg.n1 = int(v); return v == int(v); }},
        {"n2", [&](double v) { cfg.n2 = int(v); return v == int(v); }},
        {"mu", [&](double v) { cfg.local.mu = v; return true; }},
        {"n_min", [&](double v) { cfg.local.n_min = int(v); return v == int(v); }},
        {"delta", [&](double v) { cfg.local.delta = v; return true; }},
        {"collinear_tol", [&](double v) { cfg.local.collinear_tol = v; return true; }},
    };

    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank_or_comment(line)) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(name, line_no, "expected 'key = value'");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) fail(name, line_no, "unknown key '" + key + "'");
        if (seen.count(key)) fail(name, line_no, "duplicate key '" + key + "'");
        const auto num = parse_number(val);
        if (!num) fail(name, line_no, "bad value '" + val + "' for key '" + key + "'");
        if (!it->second(*num))
            fail(name, line_no, "value '" + val + "' is not valid for key '" + key + "'");
        seen.insert(key);
    }
    if (in.bad()) throw ParseError(name + ": read failure");
    for (const char* required : {"epsilon", "n_min", "n_loc"})
        if (!seen.count(required))
            throw ParseError(name + ": missing required key '" + std::string(required) +
                             "'");
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError(name + ": " + e.what());
    }
    return cfg;
}

FitConfig read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open for reading");
    return parse_config(in, path);
}

void write_mesh_dump(std::ostream& out, const HierarchicalMesh& mesh,
                     const ActiveIndexSet& active) {
    const TensorSpace& root = mesh.space(0);
    out << "thb-mesh 1\n";
    out << "levels " << mesh.num_levels() << "\n";
    out << "domain " << format_double(root.u().a()) << ' ' << format_double(root.u().b())
        << ' ' << format_double(root.v().a()) << ' ' << format_double(root.v().b())
        << "\n";
    out << "periodic_u " << (root.u().periodic() ? 1 : 0) << "\n";
    for (int l = 0; l < mesh.num_levels(); ++l) {
        const TensorSpace& sp = mesh.space(l);
        out << "level " << l << "\n";
        out << "degree " << sp.u().degree() << ' ' << sp.v().degree() << "\n";
        out << "cells " << sp.u().cells() << ' ' << sp.v().cells() << "\n";
        const auto cells = mesh.sorted_active_cells(l);
        out << "active_cells " << cells.size() << "\n";
        for (const Index2& c : cells) out << c.i << ' ' << c.j << "\n";
    }
    out << "active_functions " << active.total() << "\n";
    for (int l = 0; l < int(active.per_level.size()); ++l)
        for (const Index2& J : active.per_level[l])
            out << l << ' ' << J.i << ' ' << J.j << "\n";
}

void write_surface_obj(std::ostream& out, const HierarchicalSurface& surface, int n) {
    if (n < 2) throw std::invalid_argument("write_surface_obj: need n >= 2");
    const Box2 dom = surface.mesh().space(0).domain();
    const bool periodic = surface.mesh().space(0).u().periodic();
    const int nu = n, nv = n;
    out << "# thb-fit sampled surface, " << nu << " x " << nv << " parameter grid\n";
    for (int i = 0; i < nu; ++i) {
        const double u = periodic ? dom.u0 + dom.width() * double(i) / double(nu)
                                  : dom.u0 + dom.width() * double(i) / double(nu - 1);
        for (int j = 0; j < nv; ++j) {
            const double v = dom.v0 + dom.height() * double(j) / double(nv - 1);
            const Vec3 p = surface.eval({u, v});
            out << "v " << format_double(p.x) << ' ' << format_double(p.y) << ' '
                << format_double(p.z) << "\n";
        }
    }
    const int quads_u = periodic ? nu : nu - 1;
    auto vid = [&](int i, int j) { return (i % nu) * nv + j + 1; };
    for (int i = 0; i < quads_u; ++i)
        for (int j = 0; j + 1 < nv; ++j) {
            out << "f " << vid(i, j) << ' ' << vid(i + 1, j) << ' ' << vid(i + 1, j + 1)
                << "\n";
            out << "f " << vid(i, j) << ' ' << vid(i + 1, j + 1) << ' ' << vid(i, j + 1)
                << "\n";
        }
}

void write_report(std::ostream& out, const FitReport& report) {
    out << "# thb-fit report\n";
    out << "# r " << format_double(report.bbox_diagonal) << "\n";
    out << "# termination " << to_string(report.termination) << "\n";
    out << "levels,dof,within_fraction,max_error\n";
    for (const IterationStats& it : report.iterations)
        out << it.levels << ',' << it.dof << ',' << format_double(it.within_fraction)
            << ',' << format_double(it.max_error) << "\n";
    out << "point,error\n";
    for (std::size_t i = 0; i < report.final_errors.size(); ++i)
        out << i << ',' << format_double(report.final_errors[i]) << "\n";
}

}  // namespace thb::io
