#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "radsplice/k1_estimation.hpp"

using namespace radsplice;

namespace {

std::vector<NormalizedPoint> pts(std::initializer_list<NormalizedPoint> l) { return l; }

TEST(FitLine, Diagonal) {
    const auto p = pts({{0, 0}, {1, 1}, {2, 2}});
    const auto f = fit_line(p);
    EXPECT_EQ(f.regression, RegressionCase::YOnX);
    EXPECT_NEAR(f.slope, 1.0, 1e-15);
    EXPECT_NEAR(f.intercept, 0.0, 1e-15);
    EXPECT_NEAR(f.line.n_x, -1 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(f.line.n_y, 1 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(f.line.d0, 0.0, 1e-15);
}

TEST(FitLine, Horizontal) {
    const auto p = pts({{0, 3}, {1, 3}, {2, 3}});
    const auto f = fit_line(p);
    EXPECT_EQ(f.regression, RegressionCase::YOnX);
    EXPECT_DOUBLE_EQ(f.slope, 0.0);
    EXPECT_DOUBLE_EQ(f.intercept, 3.0);
    EXPECT_DOUBLE_EQ(f.line.n_x, 0.0);
    EXPECT_DOUBLE_EQ(f.line.n_y, 1.0);
    EXPECT_DOUBLE_EQ(f.line.d0, 3.0);
}

TEST(FitLine, VerticalUsesXOnY) {
    const auto p = pts({{2, 0}, {2, 1}, {2, 5}});
    const auto f = fit_line(p);
    EXPECT_EQ(f.regression, RegressionCase::XOnY);
    EXPECT_DOUBLE_EQ(f.slope, 0.0);
    EXPECT_DOUBLE_EQ(f.intercept, 2.0);
    EXPECT_DOUBLE_EQ(f.line.n_x, 1.0);
    EXPECT_DOUBLE_EQ(f.line.n_y, 0.0);
    EXPECT_DOUBLE_EQ(f.line.d0, 2.0);
}

TEST(FitLine, MatchesRawMomentForms) {
    const auto p = pts({{0.1, 0.3}, {0.5, 0.2}, {0.9, 0.45}, {1.3, 0.5}, {1.2, 0.1}});
    double X = 0, Y = 0, XX = 0, XY = 0;
    for (const auto& q : p) X += q.x, Y += q.y, XX += q.x * q.x, XY += q.x * q.y;
    X /= p.size(), Y /= p.size(), XX /= p.size(), XY /= p.size();
    const auto f = fit_line(p);
    EXPECT_NEAR(f.slope, (XY - X * Y) / (XX - X * X), 1e-12);
    EXPECT_NEAR(f.intercept, (XX * Y - X * XY) / (XX - X * X), 1e-12);
    EXPECT_NEAR(std::hypot(f.line.n_x, f.line.n_y), 1.0, 1e-15);
    EXPECT_GE(f.line.d0, 0.0);
}

TEST(FitLine, DegenerateInputs) {
    try {
        fit_line(pts({{1, 1}, {1, 1}, {1, 1}}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Degenerate);
    }
    EXPECT_THROW(fit_line(pts({{1, 1}})), Error);
}

TEST(Residuals, CollinearAtZero) {
    const auto p = pts({{0.1, 0.2}, {0.2, 0.35}, {0.3, 0.5}, {0.4, 0.65}});
    for (double r : residuals(p, 0.0)) EXPECT_NEAR(r, 0.0, 1e-15);
}

TEST(Residuals, VanishAtTrueK1) {
    const auto p = oracle::distorted_vertical(0.41, 0.4, 0.05, 50);
    for (double r : residuals(p, 0.05)) EXPECT_LT(std::abs(r), 1e-9);
}

TEST(Residuals, ArcProfileSpansTheSagitta) {
    // The distorted vertical line is symmetric about y = 0, so its chord is
    // vertical and the regression line is vertical too; the residual range
    // then equals the horizontal sagitta x_d(mid) - x_d(end).
    const double k1 = 0.05, c = 0.41, h = 0.4;
    const auto p = oracle::distorted_vertical(c, h, k1, 81);
    const double sagitta = distort({c, 0.0}, k1).x - distort({c, h}, k1).x;
    ASSERT_GT(sagitta, 0.0);
    const auto r = residuals(p, 0.0);
    const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
    EXPECT_NEAR(*hi - *lo, sagitta, 1e-12);
    // single-signed arc: deviations from the chord all have one sign
    for (const auto& q : p) EXPECT_GE(q.x - p.front().x, -1e-15);
    // extremes at the apex and at the ends
    EXPECT_EQ(std::distance(r.begin(), hi), 40);
    EXPECT_TRUE(std::distance(r.begin(), lo) == 0 || std::distance(r.begin(), lo) == 80);
}

TEST(Residuals, NeedThreePoints) { EXPECT_THROW(residuals(pts({{0, 0}, {1, 1}}), 0.0), Error); }

TEST(EstimateK1, StraightSegment) {
    const auto p = oracle::distorted_vertical(0.3, 0.4, 0.0, 100);
    const auto e = estimate_k1(p);
    EXPECT_NEAR(e.k1, 0.0, 1e-6);
    EXPECT_LT(e.residual_rms, 1e-9);
    EXPECT_TRUE(e.converged);
    EXPECT_EQ(e.n_points, 100u);
    EXPECT_NEAR(e.distance, 0.3, 1e-9);
}

TEST(EstimateK1, ReferenceRowMagnitude) {
    const auto p = oracle::distorted_vertical(0.41, 0.25, 0.01485, 200);
    const auto e = estimate_k1(p);
    EXPECT_NEAR(e.k1, 0.01485, 0.1 * 0.01485);
    EXPECT_NEAR(e.distance, 0.41, 1e-6);
    EXPECT_TRUE(e.converged);
}

TEST(EstimateK1, Pincushion) {
    const auto p = oracle::distorted_vertical(-0.5, 0.3, -0.05, 200);
    const auto e = estimate_k1(p);
    EXPECT_LT(e.k1, 0.0);
    EXPECT_NEAR(e.k1, -0.05, 0.005);
    EXPECT_NEAR(e.distance, -0.5, 1e-6);
}

TEST(EstimateK1, SignedDistanceConvention) {
    // left of center negative, right positive; above negative, below positive
    EXPECT_LT(estimate_k1(oracle::distorted_vertical(-0.2, 0.3, 0.05, 50)).distance, 0);
    const auto horiz = oracle::rotated(oracle::distorted_vertical(0.3, 0.4, 0.05, 50), kPi / 2);  // y = 0.3
    EXPECT_NEAR(estimate_k1(horiz).distance, 0.3, 1e-6);
    const auto above = oracle::rotated(oracle::distorted_vertical(0.3, 0.4, 0.05, 50), -kPi / 2);
    EXPECT_NEAR(estimate_k1(above).distance, -0.3, 1e-6);
}

TEST(EstimateK1, OracleRecoverySuite) {
    // segment length 0.5 normalized = 1/3 of a 4:3 frame's height
    for (double k : {0.02, 0.05, 0.1, 0.2})
        for (double s : {1.0, -1.0})
            for (double d : {0.15, 0.4, 0.7}) {
                const double k1 = s * k;
                const auto e = estimate_k1(oracle::distorted_vertical(d, 0.25, k1, 200));
                EXPECT_NEAR(e.k1, k1, std::max(0.002, 0.1 * k)) << "k1=" << k1 << " d=" << d;
                EXPECT_TRUE(e.converged);
            }
}

TEST(EstimateK1, SegmentOverload) {
    const ImageDims dims{800, 600};
    const auto m = RadialModel::for_image(dims);
    std::vector<PixelPoint> px;
    for (const auto& q : oracle::distorted_vertical(0.4, 0.3, 0.08, 240)) px.push_back(m.to_pixel(q));
    const auto e = estimate_k1(CurveSegment(px), m);
    EXPECT_NEAR(e.k1, 0.08, 1e-6);
}

TEST(EstimateK1, DegenerateSegments) {
    EXPECT_THROW(estimate_k1(oracle::distorted_vertical(0.3, 0.3, 0.0, 7)), Error);
    std::vector<NormalizedPoint> same(10, NormalizedPoint{0.2, 0.2});
    try {
        estimate_k1(same);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Degenerate);
    }
}

TEST(EstimateK1, IterationCapReportsBestSoFar) {
    EstimatorConfig cfg;
    cfg.max_iterations = 1;
    const auto p = oracle::distorted_vertical(0.6, 0.3, 0.2, 100);
    const auto e = estimate_k1(p, cfg);
    EXPECT_FALSE(e.converged);
    EXPECT_LE(cost(p, e.k1), cost(p, 0.0));
}

// ---- properties ----

TEST(EstimateProperty, NeverWorseThanNoCorrection) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> k(-0.2, 0.2), d(-0.7, 0.7), noise(-3e-4, 3e-4);
    for (int t = 0; t < 200; ++t) {
        auto p = oracle::distorted_vertical(d(rng), 0.25, k(rng), 60);
        for (auto& q : p) q.x += noise(rng), q.y += noise(rng);
        const auto e = estimate_k1(p);
        EXPECT_LE(e.residual_rms, std::sqrt(cost(p, 0.0) / p.size()) + 1e-15);
        EXPECT_GE(e.residual_rms, 0.0);
    }
}

TEST(EstimateProperty, ReturnsLocalMinimum) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> k(-0.2, 0.2), d(-0.7, 0.7), noise(-3e-4, 3e-4);
    for (int t = 0; t < 200; ++t) {
        auto p = oracle::distorted_vertical(d(rng), 0.25, k(rng), 60);
        for (auto& q : p) q.x += noise(rng), q.y += noise(rng);
        const auto e = estimate_k1(p);
        const double c0 = cost(p, e.k1);
        EXPECT_GE(cost(p, e.k1 + 1e-4), c0);
        EXPECT_GE(cost(p, e.k1 - 1e-4), c0);
    }
}

TEST(EstimateProperty, RotationInvariance) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> k(-0.2, 0.2), d(0.15, 0.7), a(-kPi, kPi), noise(-2e-4, 2e-4);
    for (int t = 0; t < 50; ++t) {
        auto p = oracle::distorted_vertical(d(rng), 0.25, k(rng), 80);
        for (auto& q : p) q.x += noise(rng), q.y += noise(rng);
        const double ref = estimate_k1(p).k1;
        for (int r = 0; r < 4; ++r) EXPECT_NEAR(estimate_k1(oracle::rotated(p, a(rng))).k1, ref, 1e-6);
    }
}

TEST(EstimateProperty, CostMatchesBruteForceFit) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> k(-0.2, 0.2), d(-0.7, 0.7), a(-kPi, kPi), noise(-1e-3, 1e-3);
    for (int t = 0; t < 10; ++t) {
        auto p = oracle::rotated(oracle::distorted_vertical(d(rng), 0.25, k(rng), 12 + t), a(rng));
        for (auto& q : p) q.x += noise(rng), q.y += noise(rng);
        for (double k1 : {-0.3, -0.1, 0.0, 0.07, 0.25}) {
            const double ref = oracle::brute_force_cost(p, k1);
            EXPECT_NEAR(cost(p, k1), ref, 1e-6 * ref) << t << " " << k1;
        }
    }
}

TEST(EstimateProperty, MatchesDenseGridSearch) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> k(-0.2, 0.2), d(0.2, 0.7), noise(-5e-4, 5e-4);
    for (int t = 0; t < 5; ++t) {
        auto p = oracle::distorted_vertical(d(rng), 0.3, k(rng), 20);
        for (auto& q : p) q.x += noise(rng), q.y += noise(rng);
        const double grid = oracle::grid_argmin([&](double k1) { return cost(p, k1); }, -0.3, 0.3, 1e-4);
        EXPECT_NEAR(estimate_k1(p).k1, grid, 1e-4);
    }
}

}  // namespace
