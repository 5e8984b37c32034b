#include "thb/synth.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace thb::synth {

Shape parse_shape(const std::string& name) {
    if (name == "plane") return Shape::Plane;
    if (name == "ridge") return Shape::Ridge;
    if (name == "peaks") return Shape::Peaks;
    if (name == "cylinder-airfoil") return Shape::CylinderAirfoil;
    throw std::invalid_argument(
        "unknown shape '" + name +
        "' (expected plane, ridge, peaks or cylinder-airfoil)");
}

const char* to_string(Shape s) {
    switch (s) {
        case Shape::Plane: return "plane";
        case Shape::Ridge: return "ridge";
        case Shape::Peaks: return "peaks";
        case Shape::CylinderAirfoil: return "cylinder-airfoil";
    }
    return "unknown";
}

Vec3 shape_point(Shape s, Vec2 p) {
    switch (s) {
        case Shape::Plane:
            return {p.u, p.v, 0.25 * p.u - 0.15 * p.v + 0.1};
        case Shape::Ridge:
            return {p.u, p.v, 0.1 * std::tanh(40.0 * (p.u + p.v - 1.0))};
        case Shape::Peaks: {
            const double s1 = 6.0 * p.u - 3.0;
            const double t1 = 6.0 * p.v - 3.0;
            const double g =
                3.0 * (1.0 - s1) * (1.0 - s1) * std::exp(-s1 * s1 - (t1 + 1.0) * (t1 + 1.0)) -
                10.0 * (s1 / 5.0 - s1 * s1 * s1 - std::pow(t1, 5)) *
                    std::exp(-s1 * s1 - t1 * t1) -
                (1.0 / 3.0) * std::exp(-(s1 + 1.0) * (s1 + 1.0) - t1 * t1);
            return {p.u, p.v, 0.02 * g};
        }
        case Shape::CylinderAirfoil: {
            const double theta = 2.0 * M_PI * p.u;
            const double taper = 1.0 - 0.2 * p.v;
            const double x = 0.06 * std::cos(theta) * taper;
            const double z = 0.015 * std::sin(theta) * (1.0 + 0.7 * std::cos(theta)) * taper;
            return {x, 0.12 * p.v, z};
        }
    }
    throw std::logic_error("shape_point: bad shape");
}

Result generate(const Spec& spec) {
    if (spec.n < 1) throw std::invalid_argument("synth: need n >= 1");
    if (spec.voids < 0) throw std::invalid_argument("synth: voids must be >= 0");
    if (spec.noise < 0.0) throw std::invalid_argument("synth: noise must be >= 0");
    if (spec.cluster < 0.0) throw std::invalid_argument("synth: cluster must be >= 0");

    Result res;
    res.periodic_u = spec.shape == Shape::CylinderAirfoil;
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (int k = 0; k < spec.voids; ++k) {
        const double cu = 0.15 + 0.7 * unit(rng);
        const double cv = 0.15 + 0.7 * unit(rng);
        const double hu = 0.05 + 0.07 * unit(rng);
        const double hv = 0.05 + 0.07 * unit(rng);
        res.void_rects.push_back({cu - hu, cu + hu, cv - hv, cv + hv});
    }

    std::vector<Vec2> centers;
    if (spec.cluster > 0.0) {
        for (int k = 0; k < 4; ++k) centers.push_back({unit(rng), unit(rng)});
    }
    const double cluster_share = spec.cluster / (1.0 + spec.cluster);

    auto in_void = [&](Vec2 p) {
        for (const Box2& r : res.void_rects)
            if (r.contains(p)) return true;
        return false;
    };

    std::normal_distribution<double> gauss(0.0, 1.0);
    auto draw_param = [&]() -> Vec2 {
        for (int attempt = 0; attempt < 10000; ++attempt) {
            Vec2 p;
            if (!centers.empty() && unit(rng) < cluster_share) {
                const Vec2 c = centers[std::size_t(unit(rng) * double(centers.size())) %
                                       centers.size()];
                p = {c.u + 0.04 * gauss(rng), c.v + 0.04 * gauss(rng)};
                if (p.u < 0.0 || p.u >= 1.0 || p.v < 0.0 || p.v > 1.0) continue;
            } else {
                p = {unit(rng), unit(rng)};
            }
            if (!in_void(p)) return p;
        }
        throw std::runtime_error("synth: rejection sampling failed (voids too large?)");
    };

    res.cloud.points.reserve(std::size_t(spec.n));
    res.cloud.params.reserve(std::size_t(spec.n));
    for (long i = 0; i < spec.n; ++i) {
        const Vec2 p = draw_param();
        Vec3 f = shape_point(spec.shape, p);
        if (spec.noise > 0.0) {
            f.x += spec.noise * gauss(rng);
            f.y += spec.noise * gauss(rng);
            f.z += spec.noise * gauss(rng);
        }
        res.cloud.params.push_back(p);
        res.cloud.points.push_back(f);
    }
    return res;
}

}  // namespace thb::synth
