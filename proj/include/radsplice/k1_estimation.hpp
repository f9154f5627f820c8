#ifndef RADSPLICE_K1_ESTIMATION_HPP
#define RADSPLICE_K1_ESTIMATION_HPP

#include <cmath>
#include <span>
#include <vector>

#include "radsplice/distortion_model.hpp"
#include "radsplice/error.hpp"
#include "radsplice/segment_extraction.hpp"

namespace radsplice {

/// n . p - d0 = 0 with |n| = 1 and d0 >= 0.
struct HesseLine {
    double n_x = 0.0;
    double n_y = 1.0;
    double d0 = 0.0;

    double signed_distance(NormalizedPoint p) const { return n_x * p.x + n_y * p.y - d0; }
    NormalizedPoint foot() const { return {n_x * d0, n_y * d0}; }
};

enum class RegressionCase { YOnX, XOnY };

struct RegressionFit {
    RegressionCase regression = RegressionCase::YOnX;
    double slope = 0.0;      ///< a (y = a x + b) or c (x = c y + d)
    double intercept = 0.0;  ///< b or d
    HesseLine line;
};

/// Linear regression of y on x when the x spread dominates (ties go to
/// y-on-x), otherwise x on y, converted to Hesse normal form. Moments are
/// accumulated about the mean; the slope and intercept equal the raw
/// moment forms (XY-bar - X-bar Y-bar) / (X2-bar - X-bar^2) etc.
inline RegressionFit fit_line(std::span<const NormalizedPoint> pts) {
    const std::size_t n = pts.size();
    if (n < 2) throw Error(ErrorCode::Degenerate, "fit_line needs at least 2 points");
    double mx = 0, my = 0;
    for (const auto& p : pts) {
        mx += p.x;
        my += p.y;
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double vx = 0, vy = 0, cxy = 0;
    for (const auto& p : pts) {
        const double dx = p.x - mx, dy = p.y - my;
        vx += dx * dx;
        vy += dy * dy;
        cxy += dx * dy;
    }
    vx /= static_cast<double>(n);
    vy /= static_cast<double>(n);
    cxy /= static_cast<double>(n);
    // spread at rounding level means the points coincide
    if (!(vx + vy > 1e-24 * (1.0 + mx * mx + my * my))) throw Error(ErrorCode::Degenerate, "fit_line: all points coincide");

    RegressionFit fit;
    if (vx >= vy) {
        fit.regression = RegressionCase::YOnX;
        const double a = cxy / vx;
        const double b = my - a * mx;
        const double s = std::sqrt(a * a + 1.0);
        fit.slope = a;
        fit.intercept = b;
        fit.line = {-a / s, 1.0 / s, b / s};
    } else {
        fit.regression = RegressionCase::XOnY;
        const double c = cxy / vy;
        const double d = mx - c * my;
        const double s = std::sqrt(c * c + 1.0);
        fit.slope = c;
        fit.intercept = d;
        fit.line = {1.0 / s, -c / s, d / s};
    }
    if (fit.line.d0 < 0.0) fit.line = {-fit.line.n_x, -fit.line.n_y, -fit.line.d0};
    return fit;
}

inline std::vector<NormalizedPoint> undistort_all(std::span<const NormalizedPoint> pts, double k1) {
    std::vector<NormalizedPoint> out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back(undistort(p, k1));
    return out;
}

/// Signed orthogonal distances of the undistorted points to the line
/// regressed through them.
inline std::vector<double> residuals(std::span<const NormalizedPoint> pts, double k1) {
    if (pts.size() < 3) throw Error(ErrorCode::Degenerate, "residuals need at least 3 points");
    const auto und = undistort_all(pts, k1);
    const HesseLine line = fit_line(und).line;
    std::vector<double> r;
    r.reserve(und.size());
    for (const auto& p : und) r.push_back(line.signed_distance(p));
    return r;
}

inline double cost(std::span<const NormalizedPoint> pts, double k1) {
    double s = 0;
    for (double r : residuals(pts, k1)) s += r * r;
    return s;
}

/// Signed distance of a line from the image center: magnitude d0, sign of
/// the dominant coordinate of the foot of the perpendicular (negative left
/// of or above the center).
inline double signed_center_distance(const HesseLine& line) {
    const NormalizedPoint f = line.foot();
    const double key = std::abs(f.x) >= std::abs(f.y) ? f.x : f.y;
    return key < 0.0 ? -line.d0 : line.d0;
}

struct EstimatorConfig {
    double jacobian_step = 1e-7;
    double step_tol = 1e-10;
    double cost_tol = 1e-12;  ///< relative decrease
    int max_iterations = 100;
    double initial_damping = 1e-3;
};

struct LineEstimate {
    double k1 = 0.0;
    double distance = 0.0;      ///< signed, normalized units
    double residual_rms = 0.0;  ///< normalized units
    std::size_t n_points = 0;
    bool converged = false;
    int iterations = 0;
    HesseLine line;             ///< fitted to the undistorted points at k1
};

/// Minimizes the sum of squared residuals over k1 alone with
/// Levenberg-Marquardt (central-difference Jacobian), starting at k1 = 0.
/// On reaching the iteration cap the best k1 so far is returned with
/// converged = false.
inline LineEstimate estimate_k1(std::span<const NormalizedPoint> pts, const EstimatorConfig& cfg = {}) {
    if (pts.size() < 8) throw Error(ErrorCode::Degenerate, "estimate_k1 needs at least 8 points");
    const double n = static_cast<double>(pts.size());
    double k = 0.0;
    std::vector<double> r = residuals(pts, k);
    auto sumsq = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x * x;
        return s;
    };
    double c = sumsq(r);
    double lambda = cfg.initial_damping;
    LineEstimate est;
    est.converged = c == 0.0;
    int it = 0;
    for (; it < cfg.max_iterations && !est.converged; ++it) {
        const auto rp = residuals(pts, k + cfg.jacobian_step);
        const auto rm = residuals(pts, k - cfg.jacobian_step);
        double g = 0, h = 0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double j = (rp[i] - rm[i]) / (2.0 * cfg.jacobian_step);
            g += j * r[i];
            h += j * j;
        }
        if (h == 0.0 || g == 0.0) {
            est.converged = true;
            break;
        }
        bool improved = false;
        while (lambda < 1e16) {
            const double step = -g / (h * (1.0 + lambda));
            const double k_new = k + step;
            auto r_new = residuals(pts, k_new);
            const double c_new = sumsq(r_new);
            if (c_new < c) {
                const double rel = (c - c_new) / c;
                k = k_new;
                r = std::move(r_new);
                c = c_new;
                lambda = std::max(lambda * 0.1, 1e-12);
                improved = true;
                if (std::abs(step) < cfg.step_tol || rel < cfg.cost_tol || c == 0.0) est.converged = true;
                break;
            }
            if (std::abs(step) < cfg.step_tol) break;
            lambda *= 10.0;
        }
        if (!improved) {
            // no decrease possible at any damping: k is a minimum to within step_tol
            est.converged = true;
            break;
        }
    }
    est.k1 = k;
    est.iterations = it;
    est.n_points = pts.size();
    est.residual_rms = std::sqrt(c / n);
    est.line = fit_line(undistort_all(pts, k)).line;
    est.distance = signed_center_distance(est.line);
    return est;
}

inline std::vector<NormalizedPoint> normalize_points(const CurveSegment& seg, const RadialModel& model) {
    std::vector<NormalizedPoint> out;
    out.reserve(seg.size());
    for (const auto& p : seg.points()) out.push_back(model.normalize(p));
    return out;
}

inline LineEstimate estimate_k1(const CurveSegment& seg, const RadialModel& geometry, const EstimatorConfig& cfg = {}) {
    const auto pts = normalize_points(seg, geometry);
    return estimate_k1(std::span<const NormalizedPoint>(pts), cfg);
}

}  // namespace radsplice

#endif
