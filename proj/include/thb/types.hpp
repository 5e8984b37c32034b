#pragma once

#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>

namespace thb {

/// 3D point / vector in model space (meters).
struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    friend Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
    friend Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
    friend Vec3 operator*(Vec3 a, double s) { return a *= s; }
    friend Vec3 operator*(double s, Vec3 a) { return a *= s; }
    friend bool operator==(const Vec3&, const Vec3&) = default;

    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    double max_abs() const {
        return std::max(std::abs(x), std::max(std::abs(y), std::abs(z)));
    }
    bool finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }
};

/// Point in the parametric domain.
struct Vec2 {
    double u = 0.0;
    double v = 0.0;
    friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Multi-index of a tensor-product basis function or cell: (u index, v index).
struct Index2 {
    int i = 0;
    int j = 0;
    friend auto operator<=>(const Index2&, const Index2&) = default;
};

struct Index2Hash {
    std::size_t operator()(const Index2& k) const noexcept {
        std::uint64_t v = (std::uint64_t(std::uint32_t(k.i)) << 32) | std::uint32_t(k.j);
        // splitmix64
        v += 0x9e3779b97f4a7c15ull;
        v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ull;
        v = (v ^ (v >> 27)) * 0x94d049bb133111ebull;
        return std::size_t(v ^ (v >> 31));
    }
};

/// A basis function identified by its level and multi-index.
struct LevelIndex {
    int level = 0;
    Index2 index;
    friend auto operator<=>(const LevelIndex&, const LevelIndex&) = default;
};

/// A cell of the level-`level` tensor grid.
struct CellRef {
    int level = 0;
    Index2 cell;
    friend auto operator<=>(const CellRef&, const CellRef&) = default;
};

/// Axis-aligned rectangle in the parametric domain.
struct Box2 {
    double u0 = 0.0, u1 = 1.0;
    double v0 = 0.0, v1 = 1.0;
    double width() const { return u1 - u0; }
    double height() const { return v1 - v0; }
    double area() const { return width() * height(); }
    bool contains(Vec2 p) const {
        return p.u >= u0 && p.u <= u1 && p.v >= v0 && p.v <= v1;
    }
};

/// Inclusive integer interval; used for cell and basis index ranges.
/// In a periodic direction the bounds live on the unwrapped index line.
struct IndexSpan {
    int lo = 0;
    int hi = -1;  // empty when hi < lo
    int count() const { return hi < lo ? 0 : hi - lo + 1; }
    bool contains(int k) const { return k >= lo && k <= hi; }
    friend bool operator==(const IndexSpan&, const IndexSpan&) = default;
};

}  // namespace thb
