#ifndef RADSPLICE_DISTORTION_MODEL_HPP
#define RADSPLICE_DISTORTION_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "radsplice/error.hpp"
#include "radsplice/geometry.hpp"

namespace radsplice {

/// Normalized image coordinates: origin at the distortion center, both axes
/// divided by half the larger image dimension. In-image points satisfy
/// max(|x|,|y|) <= 1 along the larger axis.
struct NormalizedPoint {
    double x = 0.0;
    double y = 0.0;

    constexpr bool operator==(const NormalizedPoint&) const = default;
    constexpr Vec2 vec() const { return {x, y}; }
    double radius() const { return std::hypot(x, y); }
    constexpr double radius2() const { return x * x + y * y; }
};

/// Row index grows downward and so does normalized y. Radial quantities do
/// not depend on this choice.
inline constexpr bool kNormalizedYPointsDown = true;

/// First-order radial model tied to one image geometry. The distortion
/// center is the exact image center in pixel-index coordinates,
/// ((W-1)/2, (H-1)/2).
struct RadialModel {
    double k1 = 0.0;
    Vec2 center{};
    double scale = 1.0;

    static RadialModel for_image(ImageDims dims, double k1 = 0.0) {
        if (dims.width <= 0 || dims.height <= 0)
            throw Error(ErrorCode::InvalidInput, "image dimensions must be positive");
        RadialModel m;
        m.k1 = k1;
        m.center = {(dims.width - 1) / 2.0, (dims.height - 1) / 2.0};
        m.scale = std::max(dims.width, dims.height) / 2.0;
        return m;
    }

    bool is_barrel() const { return k1 > 0.0; }
    bool is_pincushion() const { return k1 < 0.0; }

    NormalizedPoint normalize(PixelPoint p) const {
        const double sy = kNormalizedYPointsDown ? 1.0 : -1.0;
        return {(p.x - center.x) / scale, sy * (p.y - center.y) / scale};
    }

    PixelPoint to_pixel(NormalizedPoint q) const {
        const double sy = kNormalizedYPointsDown ? 1.0 : -1.0;
        return {center.x + q.x * scale, center.y + sy * q.y * scale};
    }

    /// Largest normalized radius of any in-image point (the corners).
    double max_radius(ImageDims dims) const {
        const Vec2 corner{std::max(center.x + 0.5, dims.width - 0.5 - center.x),
                          std::max(center.y + 0.5, dims.height - 0.5 - center.y)};
        return norm(corner) / scale;
    }
};

inline NormalizedPoint normalize(PixelPoint p, ImageDims dims) {
    return RadialModel::for_image(dims).normalize(p);
}

/// x_u = x_d (1 + k1 r_d^2), y_u likewise.
constexpr NormalizedPoint undistort(NormalizedPoint pd, double k1) {
    const double f = 1.0 + k1 * pd.radius2();
    return {pd.x * f, pd.y * f};
}

/// Largest |k1| for which r -> r (1 + k1 r^2) is monotone on [0, r_max] for
/// either sign of k1.
inline double monotone_k1_bound(double r_max) { return 1.0 / (3.0 * r_max * r_max); }

inline bool in_monotone_regime(double k1, double r_max) {
    return std::abs(k1) < monotone_k1_bound(r_max);
}

struct DistortSettings {
    double tolerance = 1e-12;
    int max_iterations = 50;
};

/// Inverse of undistort: finds r_d with r_d (1 + k1 r_d^2) = r_u on the
/// monotone branch by bracketed Newton iteration and keeps the direction.
inline NormalizedPoint distort(NormalizedPoint pu, double k1, DistortSettings settings = {}) {
    if (!std::isfinite(pu.x) || !std::isfinite(pu.y) || !std::isfinite(k1))
        throw Error(ErrorCode::InvalidInput, "distort: non-finite input");
    const double ru = pu.radius();
    if (k1 == 0.0 || ru == 0.0) return pu;

    double lo = 0.0;
    double hi = ru;
    if (k1 < 0.0) {
        // Monotone branch ends at r* = 1/sqrt(3|k1|), where r_u peaks at 2r*/3.
        const double r_star = 1.0 / std::sqrt(-3.0 * k1);
        if (ru >= 2.0 * r_star / 3.0)
            throw Error(ErrorCode::NonMonotone,
                        "distort: radius " + std::to_string(ru) +
                            " unreachable on the monotone branch for k1=" + std::to_string(k1));
        lo = ru;
        hi = r_star;
    }

    auto f = [&](double r) { return r * (1.0 + k1 * r * r) - ru; };
    double r = ru;
    for (int it = 0; it < settings.max_iterations; ++it) {
        const double fr = f(r);
        if (fr < 0.0) lo = r; else hi = r;
        const double df = 1.0 + 3.0 * k1 * r * r;
        double next = r - fr / df;
        if (!(next > lo && next < hi) || df <= 0.0) next = 0.5 * (lo + hi);
        if (std::abs(next - r) <= settings.tolerance * std::max(1.0, r)) {
            const double s = next / ru;
            return {pu.x * s, pu.y * s};
        }
        r = next;
    }
    throw Error(ErrorCode::NoConvergence, "distort: root finder did not converge");
}

}  // namespace radsplice

#endif
