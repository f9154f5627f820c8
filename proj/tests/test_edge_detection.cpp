#include <gtest/gtest.h>

#include <cmath>

#include "radsplice/edge_detection.hpp"

using namespace radsplice;

namespace {

/// Anti-aliased half-plane: luminance ramps linearly over 1 px across the
/// line n . p = c (pixel coordinates).
GrayImage step_image(int w, int h, Vec2 n, double c, double lo = 0.3, double hi = 0.7) {
    GrayImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double s = std::clamp(dot(n, {double(x), double(y)}) - c, -0.5, 0.5);
            img.at(x, y) = static_cast<float>(lo + (hi - lo) * (s + 0.5));
        }
    return img;
}

TEST(GaussianKernels, UnitSlopeResponse) {
    const GaussianKernels k(1.0);
    EXPECT_EQ(k.radius, 3);
    double sum = 0, slope = 0;
    for (int i = -k.radius; i <= k.radius; ++i) {
        sum += k.smooth[i + k.radius];
        slope += k.deriv[i + k.radius] * -i;  // convolution with f(x) = x
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_NEAR(slope, 1.0, 1e-12);
}

TEST(ParabolaVertex, KnownValues) {
    EXPECT_DOUBLE_EQ(parabola_vertex(1, 2, 1), 0.0);
    // y = -(t - 0.25)^2 sampled at -1, 0, 1
    auto f = [](double t) { return -(t - 0.25) * (t - 0.25); };
    EXPECT_NEAR(parabola_vertex(f(-1), f(0), f(1)), 0.25, 1e-12);
    EXPECT_DOUBLE_EQ(parabola_vertex(1, 1, 1), 0.0);
}

TEST(DetectEdges, ConstantImageHasNoEdgels) {
    EXPECT_TRUE(detect_edges(GrayImage(40, 30, 0.5f)).empty());
}

TEST(DetectEdges, RejectsInvalidImages) {
    EXPECT_THROW(detect_edges(GrayImage(15, 40, 0.5f)), Error);
    GrayImage bad(20, 20, 0.5f);
    bad.at(3, 3) = 1.5f;
    EXPECT_THROW(detect_edges(bad), Error);
    bad.at(3, 3) = NAN;
    EXPECT_THROW(detect_edges(bad), Error);
}

TEST(DetectEdges, RejectsBadConfig) {
    EdgeConfig c;
    c.sigma = 0;
    EXPECT_THROW(detect_edges(GrayImage(20, 20), c), Error);
    c = {};
    c.hysteresis_low = 0.05;  // above the high threshold
    EXPECT_THROW(detect_edges(GrayImage(20, 20), c), Error);
}

TEST(DetectEdges, VerticalStepBetweenColumns) {
    // ramp centered at x = 10.5
    const auto img = step_image(24, 40, {1, 0}, 10.5);
    const auto edgels = detect_edges(img);
    const int margin = GaussianKernels(1.0).radius + 1;
    int rows = 0;
    for (const auto& e : edgels) {
        EXPECT_NEAR(e.pos.x, 10.5, 0.15);
        EXPECT_NEAR(e.gradient_dir, 0.0, 1e-6);
        ++rows;
    }
    EXPECT_EQ(rows, 40 - 2 * margin);
}

TEST(DetectEdges, SubpixelPeakMatchesFineGridOracle) {
    // brute-force oracle: maximize the parabola through the sampled
    // magnitudes on a fine grid and compare to the closed form
    const auto img = step_image(32, 32, {1, 0}, 15.3);
    const auto g = compute_gradients(img, 1.0);
    for (const auto& e : detect_edges(img)) {
        const int x = static_cast<int>(std::lround(e.pos.x)), y = static_cast<int>(std::lround(e.pos.y));
        int xm = x;
        for (int dx = -1; dx <= 1; ++dx)
            if (g.magnitude(x + dx, y) > g.magnitude(xm, y)) xm = x + dx;
        const double a = g.magnitude(xm - 1, y), b = g.magnitude(xm, y), c = g.magnitude(xm + 1, y);
        double best_t = 0, best = -1e300;
        for (double t = -0.5; t <= 0.5; t += 1e-5) {
            const double v = b + 0.5 * (c - a) * t + 0.5 * (a - 2 * b + c) * t * t;
            if (v > best) best = v, best_t = t;
        }
        EXPECT_NEAR(e.pos.x, xm + best_t, 2e-5);
        EXPECT_NEAR(e.pos.x, 15.3, 0.15);
    }
}

TEST(DetectEdges, DiagonalStep) {
    const Vec2 n{std::sqrt(0.5), std::sqrt(0.5)};
    const auto img = step_image(48, 48, n, 33.0);
    const auto edgels = detect_edges(img);
    ASSERT_GT(edgels.size(), 20u);
    for (const auto& e : edgels) {
        EXPECT_NEAR(dot(n, e.pos) - 33.0, 0.0, 0.2);
        EXPECT_NEAR(e.gradient_dir, kPi / 4, deg_to_rad(5));
    }
}

TEST(DetectEdges, SubpixelResidualOnManyOrientations) {
    for (double deg = 0; deg < 180; deg += 7.5) {
        const Vec2 n{std::cos(deg_to_rad(deg)), std::sin(deg_to_rad(deg))};
        const double c = dot(n, {31.7, 30.2});
        const auto img = step_image(64, 64, n, c, 0.4, 0.6);  // contrast 0.2
        double ss = 0;
        const auto edgels = detect_edges(img);
        ASSERT_GT(edgels.size(), 30u) << deg;
        for (const auto& e : edgels) ss += std::pow(dot(n, e.pos) - c, 2);
        EXPECT_LT(std::sqrt(ss / edgels.size()), 0.2) << "orientation " << deg;
    }
}

TEST(DetectEdges, OrderedByRowThenColumn) {
    const auto img = step_image(48, 48, {std::sqrt(0.5), -std::sqrt(0.5)}, 0.0);
    const auto edgels = detect_edges(img);
    for (std::size_t i = 1; i < edgels.size(); ++i) {
        // refinement moves an edgel by at most half a pixel
        EXPECT_LE(edgels[i - 1].pos.y, edgels[i].pos.y + 1.0);
    }
}

TEST(DetectEdges, EveryEdgelRespectsContract) {
    const auto img = step_image(40, 40, {0.6, 0.8}, 25.0);
    EdgeConfig cfg;
    for (const auto& e : detect_edges(img, cfg)) {
        EXPECT_GT(e.gradient_mag, cfg.threshold);
        EXPECT_GE(e.pos.x, 0);
        EXPECT_GE(e.pos.y, 0);
        EXPECT_LE(e.pos.x, img.width() - 1);
        EXPECT_LE(e.pos.y, img.height() - 1);
        EXPECT_NEAR(norm(e.normal()), 1.0, 1e-12);
        EXPECT_NEAR(dot(e.normal(), e.tangent()), 0.0, 1e-12);
    }
}

// ---- properties ----

TEST(EdgeProperty, IntegerShiftEquivariance) {
    const Vec2 n{0.8, 0.6};
    const auto a = detect_edges(step_image(64, 64, n, 40.0));
    // shift by (+3, +2): n . (p - s) = c  <=>  n . p = c + n . s
    const auto b = detect_edges(step_image(64, 64, n, 40.0 + dot(n, {3, 2})));
    // edgels away from the borders must match one-to-one after the shift
    std::size_t matched = 0;
    for (const auto& e : a) {
        if (e.pos.x < 8 || e.pos.y < 8 || e.pos.x > 50 || e.pos.y > 50) continue;
        bool found = false;
        for (const auto& f : b)
            if (std::abs(f.pos.x - e.pos.x - 3) < 1e-4 && std::abs(f.pos.y - e.pos.y - 2) < 1e-4) found = true;
        EXPECT_TRUE(found) << e.pos.x << "," << e.pos.y;
        ++matched;
    }
    EXPECT_GT(matched, 10u);
}

TEST(EdgeProperty, RaisingThresholdNeverAddsEdgels) {
    // two edges of different contrast plus mild texture
    GrayImage img(64, 64);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            img.at(x, y) = static_cast<float>(0.3 + 0.3 * (x > 20) + 0.05 * (y > 40) + 0.01 * std::sin(x * 0.7 + y));
    std::size_t prev = SIZE_MAX;
    for (double t : {0.005, 0.01, 0.02, 0.03, 0.05, 0.1, 0.2, 0.4}) {
        EdgeConfig c;
        c.threshold = t;
        const auto n = detect_edges(img, c).size();
        EXPECT_LE(n, prev) << t;
        prev = n;
    }
}

TEST(EdgeProperty, HysteresisKeepsWeakPixelsAttachedToStrongOnes) {
    GrayImage img(64, 40);
    // contrast falls along the edge from strong to weak
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 64; ++x) {
            const double c = 0.5 * (1.0 - x / 70.0);
            img.at(x, y) = static_cast<float>(0.5 + (y > 20 ? c / 2 : -c / 2));
        }
    EdgeConfig strong;
    strong.threshold = 0.1;
    EdgeConfig hyst = strong;
    hyst.hysteresis_low = 0.02;
    const auto a = detect_edges(img, strong).size();
    const auto b = detect_edges(img, hyst).size();
    EXPECT_GT(b, a);
}

}  // namespace
