#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "thb/adaptive_fit.hpp"

namespace thb::io {

/// Input problem (file, line, reason); message already formatted.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shortest text that reads back bit-identically ("%.17g").
std::string format_double(double x);

/// Cloud files: one "x y z u v" record per line, '#' comments and blank
/// lines ignored, locale-independent parsing.
PointCloud read_cloud(std::istream& in, const std::string& name = "<stream>");
PointCloud read_cloud_file(const std::string& path);
void write_cloud(std::ostream& out, const PointCloud& cloud,
                 const std::vector<std::string>& header_comments = {});
void write_cloud_file(const std::string& path, const PointCloud& cloud,
                      const std::vector<std::string>& header_comments = {});

/// Config files: flat "key = value" lines, '#' comments; unknown keys and
/// out-of-range values are errors. epsilon, n_min and n_loc are required,
/// everything else has the documented default.
FitConfig parse_config(std::istream& in, const std::string& name = "<stream>");
FitConfig read_config_file(const std::string& path);

/// Hierarchical-mesh dump (docs/formats.md).
void write_mesh_dump(std::ostream& out, const HierarchicalMesh& mesh,
                     const ActiveIndexSet& active);

/// Surface sampled on an n x n parameter grid as a Wavefront OBJ triangle
/// mesh; a periodic u direction is stitched closed (no duplicated seam
/// vertices).
void write_surface_obj(std::ostream& out, const HierarchicalSurface& surface, int n);

/// Fit report as comma-separated text: '#' context lines, one row per
/// iteration, then one row per data point (docs/formats.md).
void write_report(std::ostream& out, const FitReport& report);

}  // namespace thb::io
