#ifndef RADSPLICE_GEOMETRY_HPP
#define RADSPLICE_GEOMETRY_HPP

#include <cmath>

namespace radsplice {

/// Plain 2-D vector used for pixel and normalized coordinates alike.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr bool operator==(const Vec2&) const = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
constexpr Vec2 perp(Vec2 a) { return {-a.y, a.x}; }

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }

/// Pixel-index coordinates: pixel (col,row) has its center at (col,row).
using PixelPoint = Vec2;

struct ImageDims {
    int width = 0;
    int height = 0;
};

}  // namespace radsplice

#endif
