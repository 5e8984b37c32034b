#pragma once

#include <string>
#include <vector>

#include "thb/local_fit.hpp"
#include "thb/types.hpp"

namespace thb::synth {

enum class Shape { Plane, Ridge, Peaks, CylinderAirfoil };

Shape parse_shape(const std::string& name);  ///< throws std::invalid_argument
const char* to_string(Shape s);

/// Deterministic per seed. Parameters are drawn on the unit square; voids
/// punch rectangular parameter holes (rejection sampling); cluster > 0
/// concentrates a share of the samples around a few random centers; noise
/// is an isotropic Gaussian added to the 3D point.
struct Spec {
    Shape shape = Shape::Plane;
    long n = 1000;
    double noise = 0.0;
    int voids = 0;
    double cluster = 0.0;
    std::uint64_t seed = 1;
};

struct Result {
    PointCloud cloud;
    std::vector<Box2> void_rects;
    bool periodic_u = false;  ///< the shape closes in the u direction
};

Result generate(const Spec& spec);

/// The documented test surfaces, exact (no noise):
///   plane : z = 0.25 u - 0.15 v + 0.1, point (u, v, z)
///   ridge : z = 0.1 tanh(40 (u + v - 1)), point (u, v, z)
///   peaks : scaled three-bump exponential surface
///   cylinder-airfoil: closed cambered cross-section extruded along v
Vec3 shape_point(Shape s, Vec2 param);

}  // namespace thb::synth
