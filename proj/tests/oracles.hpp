#ifndef RADSPLICE_TESTS_ORACLES_HPP
#define RADSPLICE_TESTS_ORACLES_HPP

// Independent reference implementations used by the unit and acceptance
// tests. None of them call into the estimator code under test.

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "radsplice/distortion_model.hpp"
#include "radsplice/edge_detection.hpp"

namespace radsplice::oracle {

/// Points of the undistorted line x = offset (normalized), |y| <= half_len,
/// pushed through the forward distortion.
inline std::vector<NormalizedPoint> distorted_vertical(double offset, double half_len, double k1, int n) {
    std::vector<NormalizedPoint> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double y = -half_len + 2.0 * half_len * i / (n - 1);
        out.push_back(distort({offset, y}, k1));
    }
    return out;
}

inline std::vector<NormalizedPoint> rotated(std::span<const NormalizedPoint> pts, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    std::vector<NormalizedPoint> out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back({c * p.x - s * p.y, s * p.x + c * p.y});
    return out;
}

/// Sum of squared orthogonal distances of the undistorted points to the
/// line found by exhaustive search. The line minimizes the regression
/// objective of the dominant-spread branch (vertical offsets for y on x,
/// horizontal ones for x on y), searched over (angle, offset) on a grid
/// that is refined around the best cell until it is finer than 1e-13.
inline double brute_force_cost(std::span<const NormalizedPoint> pts, double k1) {
    std::vector<NormalizedPoint> u;
    for (const auto& p : pts) u.push_back(undistort(p, k1));
    double mx = 0, my = 0;
    for (const auto& p : u) mx += p.x, my += p.y;
    mx /= u.size();
    my /= u.size();
    double vx = 0, vy = 0;
    for (const auto& p : u) vx += (p.x - mx) * (p.x - mx), vy += (p.y - my) * (p.y - my);
    const bool y_on_x = vx >= vy;
    // line through (mx, my) + offset along the regressed axis, at angle t
    // from the independent axis
    auto objective = [&](double t, double off) {
        double s = 0;
        const double slope = std::tan(t);
        for (const auto& p : u) {
            const double r = y_on_x ? (p.y - my - off) - slope * (p.x - mx) : (p.x - mx - off) - slope * (p.y - my);
            s += r * r;
        }
        return s;
    };
    double t0 = 0, o0 = 0, t_half = 1.4, o_half = 1.0;
    for (int level = 0; level < 40 && (t_half > 1e-13 || o_half > 1e-13); ++level) {
        constexpr int G = 40;
        double best = INFINITY, bt = t0, bo = o0;
        for (int i = -G; i <= G; ++i)
            for (int j = -G; j <= G; ++j) {
                const double t = t0 + t_half * i / G, o = o0 + o_half * j / G;
                const double v = objective(t, o);
                if (v < best) best = v, bt = t, bo = o;
            }
        t0 = bt;
        o0 = bo;
        t_half *= 4.0 / G;
        o_half *= 4.0 / G;
    }
    // orthogonal distances to the found line
    const double slope = std::tan(t0);
    double s = 0;
    for (const auto& p : u) {
        const double r = y_on_x ? (p.y - my - o0) - slope * (p.x - mx) : (p.x - mx - o0) - slope * (p.y - my);
        s += r * r / (1.0 + slope * slope);
    }
    return s;
}

/// Dense grid argmin of f over [lo, hi] with the given step.
template <class F>
double grid_argmin(F&& f, double lo, double hi, double step) {
    const long n = std::lround((hi - lo) / step);
    double best = INFINITY, arg = lo;
    for (long i = 0; i <= n; ++i) {
        const double k = lo + step * static_cast<double>(i);
        const double v = f(k);
        if (v < best) best = v, arg = k;
    }
    return arg;
}

/// Adds isotropic Gaussian positional noise (pixels) to edgel positions.
inline void jitter(std::vector<SubpixelEdgel>& e, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, sigma);
    for (auto& x : e) {
        x.pos.x += g(rng);
        x.pos.y += g(rng);
    }
}

}  // namespace radsplice::oracle

#endif
