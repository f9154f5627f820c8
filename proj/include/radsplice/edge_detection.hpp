#ifndef RADSPLICE_EDGE_DETECTION_HPP
#define RADSPLICE_EDGE_DETECTION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "radsplice/error.hpp"
#include "radsplice/geometry.hpp"
#include "radsplice/image.hpp"

namespace radsplice {

struct EdgeConfig {
    double sigma = 1.0;          ///< Gaussian scale of the derivative filters, px
    double threshold = 0.03;     ///< gradient magnitude floor, luminance/px
    std::optional<double> hysteresis_low;  ///< weak threshold; enables hysteresis when set

    void validate() const {
        if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidInput, "edge sigma must be positive");
        if (!(threshold > 0.0)) throw Error(ErrorCode::InvalidInput, "edge threshold must be positive");
        if (hysteresis_low && !(*hysteresis_low > 0.0 && *hysteresis_low <= threshold))
            throw Error(ErrorCode::InvalidInput, "hysteresis_low must be in (0, threshold]");
    }
};

struct SubpixelEdgel {
    PixelPoint pos;
    double gradient_dir = 0.0;  ///< radians, atan2 in pixel axes (y down)
    double gradient_mag = 0.0;

    Vec2 normal() const { return {std::cos(gradient_dir), std::sin(gradient_dir)}; }
    /// Edge direction with the brighter side on the left; stable along a
    /// contour of constant polarity.
    Vec2 tangent() const { return perp(normal()); }
};

/// Separable Gaussian smoothing and derivative kernels. The derivative
/// kernel is scaled so a unit-slope ramp gives a response of exactly 1.
struct GaussianKernels {
    int radius = 0;
    std::vector<double> smooth;
    std::vector<double> deriv;

    explicit GaussianKernels(double sigma) {
        radius = static_cast<int>(std::ceil(3.0 * sigma));
        smooth.resize(2 * radius + 1);
        deriv.resize(2 * radius + 1);
        double sum = 0.0, moment = 0.0;
        for (int i = -radius; i <= radius; ++i) {
            const double g = std::exp(-0.5 * i * i / (sigma * sigma));
            smooth[i + radius] = g;
            sum += g;
            moment += i * i * g;
        }
        for (int i = -radius; i <= radius; ++i) {
            deriv[i + radius] = -i * smooth[i + radius] / moment;
            smooth[i + radius] /= sum;
        }
    }
};

/// Gradient field of an image; components are float, computed in double.
struct GradientField {
    int width = 0;
    int height = 0;
    std::vector<float> gx, gy, mag;

    float magnitude(int x, int y) const { return mag[static_cast<std::size_t>(y) * width + x]; }

    double magnitude_bilinear(double x, double y) const {
        const double fx = std::floor(x), fy = std::floor(y);
        int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
        const double ax = x - fx, ay = y - fy;
        auto at = [&](int xi, int yi) {
            xi = xi < 0 ? 0 : (xi >= width ? width - 1 : xi);
            yi = yi < 0 ? 0 : (yi >= height ? height - 1 : yi);
            return static_cast<double>(magnitude(xi, yi));
        };
        return (1 - ay) * ((1 - ax) * at(x0, y0) + ax * at(x0 + 1, y0)) +
               ay * ((1 - ax) * at(x0, y0 + 1) + ax * at(x0 + 1, y0 + 1));
    }
};

inline GradientField compute_gradients(const GrayImage& img, double sigma) {
    const GaussianKernels k(sigma);
    const int w = img.width(), h = img.height(), r = k.radius;
    const std::size_t n = static_cast<std::size_t>(w) * h;
    std::vector<double> sx(n), dx(n);  // horizontal pass: smoothed / differentiated
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0, d = 0.0;
            for (int i = -r; i <= r; ++i) {
                // correlation with the flipped kernel == convolution
                const double v = img.clamped(x - i, y);
                s += k.smooth[i + r] * v;
                d += k.deriv[i + r] * v;
            }
            sx[static_cast<std::size_t>(y) * w + x] = s;
            dx[static_cast<std::size_t>(y) * w + x] = d;
        }
    GradientField g;
    g.width = w;
    g.height = h;
    g.gx.resize(n);
    g.gy.resize(n);
    g.mag.resize(n);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double gx = 0.0, gy = 0.0;
            for (int i = -r; i <= r; ++i) {
                const int yy = std::clamp(y - i, 0, h - 1);
                const std::size_t j = static_cast<std::size_t>(yy) * w + x;
                gx += k.smooth[i + r] * dx[j];
                gy += k.deriv[i + r] * sx[j];
            }
            const std::size_t j = static_cast<std::size_t>(y) * w + x;
            g.gx[j] = static_cast<float>(gx);
            g.gy[j] = static_cast<float>(gy);
            g.mag[j] = static_cast<float>(std::hypot(gx, gy));
        }
    return g;
}

/// Sub-pixel vertex of the parabola through (-1,a), (0,b), (1,c).
inline double parabola_vertex(double a, double b, double c) {
    const double denom = a - 2.0 * b + c;
    if (denom == 0.0) return 0.0;
    return 0.5 * (a - c) / denom;
}

/// Non-maxima suppression of the gradient norm along the continuous
/// gradient direction (neighbors sampled bilinearly at +-1 px), refined by
/// the vertex of the parabola through the three samples. Output is ordered
/// by row, then column, of the originating pixel.
inline std::vector<SubpixelEdgel> detect_edges(const GrayImage& img, const EdgeConfig& cfg = {}) {
    img.validate();
    cfg.validate();
    const GradientField g = compute_gradients(img, cfg.sigma);
    const int w = img.width(), h = img.height();
    const int margin = GaussianKernels(cfg.sigma).radius + 1;
    const double low = cfg.hysteresis_low.value_or(cfg.threshold);

    struct Candidate {
        SubpixelEdgel edgel;
        int x, y;
    };
    std::vector<Candidate> found;
    std::vector<std::int32_t> index_of(static_cast<std::size_t>(w) * h, -1);

    for (int y = margin; y < h - margin; ++y)
        for (int x = margin; x < w - margin; ++x) {
            const std::size_t j = static_cast<std::size_t>(y) * w + x;
            const double m = g.mag[j];
            if (!(m > low)) continue;
            const double ux = g.gx[j] / m, uy = g.gy[j] / m;
            const double a = g.magnitude_bilinear(x - ux, y - uy);
            const double c = g.magnitude_bilinear(x + ux, y + uy);
            // strict on one side, non-strict on the other: a plateau of two
            // equal maxima yields exactly one edgel
            if (!(m > a && m >= c)) continue;
            const double t = std::clamp(parabola_vertex(a, m, c), -0.5, 0.5);
            SubpixelEdgel e;
            e.pos = {x + t * ux, y + t * uy};
            e.gradient_dir = std::atan2(uy, ux);
            e.gradient_mag = m;
            index_of[j] = static_cast<std::int32_t>(found.size());
            found.push_back({e, x, y});
        }

    std::vector<char> keep(found.size(), 0);
    if (!cfg.hysteresis_low) {
        std::fill(keep.begin(), keep.end(), 1);
    } else {
        std::vector<std::size_t> stack;
        for (std::size_t i = 0; i < found.size(); ++i)
            if (found[i].edgel.gradient_mag > cfg.threshold && !keep[i]) {
                keep[i] = 1;
                stack.push_back(i);
                while (!stack.empty()) {
                    const Candidate& c = found[stack.back()];
                    stack.pop_back();
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            const int nx = c.x + dx, ny = c.y + dy;
                            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                            const auto k = index_of[static_cast<std::size_t>(ny) * w + nx];
                            if (k >= 0 && !keep[k]) {
                                keep[k] = 1;
                                stack.push_back(static_cast<std::size_t>(k));
                            }
                        }
                }
            }
    }

    std::vector<SubpixelEdgel> out;
    out.reserve(found.size());
    for (std::size_t i = 0; i < found.size(); ++i)
        if (keep[i]) out.push_back(found[i].edgel);
    return out;
}

}  // namespace radsplice

#endif
