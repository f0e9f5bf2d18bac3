#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "infl/quadrature.hpp"
#include "infl/sources.hpp"

using namespace infl;

namespace {

SplitPathParams base_params() {
    SplitPathParams p;
    p.t_total = 1.0;
    p.separation = 0.1;
    p.hold_fraction = 0.5;
    p.coupling = 0.1;
    p.sigma = 0.005;
    return p;
}

// Independent smeared point density (2 pi s^2)^{-3/2} exp(-r^2 / 2 s^2).
double gauss_density(double r, double s) {
    return std::exp(-r * r / (2 * s * s)) / std::pow(2 * std::numbers::pi * s * s, 1.5);
}

}  // namespace

TEST(Worldline, RejectsInvalidSamples) {
    const std::vector<Vec3> x(3), v(3);
    EXPECT_THROW(Worldline({0, 1, 1}, x, v, 1, 0.1), Error);
    EXPECT_THROW(Worldline({0, 1, 2}, x, v, 1, 0.0), Error);
    EXPECT_THROW(Worldline({0, 1, 2}, x, {Vec3{}, Vec3{1, 0, 0}, Vec3{}}, 1, 0.1), Error);
    EXPECT_THROW(Worldline({0, NAN, 2}, x, v, 1, 0.1), Error);
    EXPECT_THROW(Worldline({0, 1}, x, v, 1, 0.1), Error);
}

TEST(Worldline, HermiteInterpolationReproducesCubics) {
    auto pos = [](double t) { return Vec3{0.1 * t * t * t - 0.2 * t, 0.05 * t * t, 0.3 - 0.01 * t}; };
    auto vel = [](double t) { return Vec3{0.3 * t * t - 0.2, 0.1 * t, -0.01}; };
    std::vector<double> t{0, 0.3, 0.7, 1.0};
    std::vector<Vec3> x, v;
    for (double s : t) {
        x.push_back(pos(s));
        v.push_back(vel(s));
    }
    Worldline w(t, x, v, 1, 0.1);
    for (double s = 0.01; s < 1; s += 0.07) {
        const auto k = w.at(s);
        EXPECT_NEAR(norm(k.x - pos(s)), 0, 1e-14);
        EXPECT_NEAR(norm(k.v - vel(s)), 0, 1e-13);
    }
}

TEST(SplitPath, ZeroSeparationHasVanishingCurrent) {
    auto p = base_params();
    p.separation = 0;
    const auto src = make_split_path(p);
    EXPECT_TRUE(src.trivial());
    for (double t : {0.0, 0.2, 0.5, 0.9})
        for (double z : {-0.01, 0.0, 0.003}) {
            const auto j = delta_current(src, {t, {0.001, 0, z}});
            for (double c : j) EXPECT_EQ(c, 0.0);
        }
}

TEST(SplitPath, BranchesCloseAtBothEnds) {
    auto p = base_params();
    p.center = {0.3, -1.0, 2.0};
    p.axis = {1, 1, 0};
    const auto src = make_split_path(p);
    for (int b = 0; b < 2; ++b) {
        EXPECT_EQ(norm(src.branch(b).positions().front() - p.center), 0.0);
        EXPECT_EQ(norm(src.branch(b).positions().back() - p.center), 0.0);
    }
}

TEST(SplitPath, PeakSpeedMatchesRampByFiniteDifferences) {
    auto p = base_params();
    p.intervals = 1024;
    const auto src = make_split_path(p);
    const auto& x = src.right().positions();
    const double h = p.t_total / p.intervals;
    double vmax_fd = 0;
    for (std::size_t i = 2; i + 2 < x.size(); ++i) {
        const Vec3 d = (8.0 * (x[i + 1] - x[i - 1]) - (x[i + 2] - x[i - 2])) * (1.0 / (12 * h));
        vmax_fd = std::max(vmax_fd, norm(d));
    }
    // Ramp u - sin(2 pi u)/(2 pi) over tau = (1 - hold) T / 2 peaks at separation / tau.
    const double tau = 0.5 * (1 - p.hold_fraction) * p.t_total;
    EXPECT_LT(vmax_fd, 1.0);
    EXPECT_NEAR(vmax_fd, p.separation / tau, 1e-6);
    EXPECT_NEAR(src.max_speed(), p.separation / tau, 1e-12);
    EXPECT_NEAR(split_path_peak_speed(p), 0.4, 1e-15);
}

TEST(SplitPath, RejectsInvalidParameters) {
    auto p = base_params();
    p.hold_fraction = 1.0;
    EXPECT_THROW(make_split_path(p), Error);
    p = base_params();
    p.t_total = NAN;
    EXPECT_THROW(make_split_path(p), Error);
    p = base_params();
    p.separation = 0.6;  // peak speed 2.4
    EXPECT_THROW(make_split_path(p), Error);
    p = base_params();
    p.sigma = 0.0;
    EXPECT_THROW(make_split_path(p), Error);
}

TEST(DeltaCurrent, ChargeDifferenceIntegratesToZero) {
    const auto p = base_params();
    const auto src = make_split_path(p);
    for (double t : {0.1, 0.5}) {
        // Composite Gauss-Legendre over a box enclosing both smeared charges.
        const GaussRule& g = gauss_legendre(8);
        auto axis_nodes = [&](double a, double b, int panels) {
            std::vector<std::pair<double, double>> n;
            const double w = (b - a) / panels;
            for (int i = 0; i < panels; ++i)
                for (int j = 0; j < 8; ++j) n.push_back({a + w * (i + 0.5 * (1 + g.x[j])), 0.5 * w * g.w[j]});
            return n;
        };
        const auto xs = axis_nodes(-0.04, 0.04, 16), zs = axis_nodes(-0.1, 0.1, 40);
        double total = 0, upper = 0;
        for (auto [x, wx] : xs)
            for (auto [y, wy] : xs)
                for (auto [z, wz] : zs) {
                    const double j0 = delta_current(src, {t, {x, y, z}})[0] * wx * wy * wz;
                    total += j0;
                    if (z > 0) upper += j0;
                }
        EXPECT_NEAR(total, 0.0, 1e-8);
        if (t == 0.5) { EXPECT_NEAR(upper, p.coupling, 1e-8); }
    }
}

TEST(DeltaCurrent, MatchesGaussianAtMidHold) {
    const auto p = base_params();
    const auto src = make_split_path(p);
    const double s = *p.sigma;
    const double expected0 = p.coupling * (gauss_density(0, s) - gauss_density(p.separation, s));
    const auto j = delta_current(src, {0.5, {0, 0, 0.5 * p.separation}});
    EXPECT_NEAR(j[0], expected0, 1e-12 * std::abs(expected0));
    EXPECT_EQ(j[1], 0.0);
    EXPECT_EQ(j[3], 0.0);
    // Off-axis point: both Gaussians evaluated directly.
    const Vec3 q{0.003, -0.002, 0.04};
    const double e = p.coupling * (gauss_density(norm(q - Vec3{0, 0, 0.05}), s) - gauss_density(norm(q + Vec3{0, 0, 0.05}), s));
    EXPECT_NEAR(delta_current(src, {0.5, q})[0], e, 1e-12 * std::abs(e));
}

TEST(DeltaCurrent, SwitchedOffOutsideWindowAndRejectsGr) {
    const auto src = make_split_path(base_params());
    for (double c : delta_current(src, {1.5, {0, 0, 0.05}})) EXPECT_EQ(c, 0.0);
    for (double c : delta_current(src, {-0.1, {0, 0, 0.05}})) EXPECT_EQ(c, 0.0);
    auto p = base_params();
    p.field = FieldType::GR;
    EXPECT_THROW(delta_current(make_split_path(p), {0.5, {}}), Error);
    EXPECT_THROW(delta_stress(src, {0.5, {}}), Error);
}

TEST(DeltaCurrent, GaussianTailBound) {
    const auto p = base_params();
    const auto src = make_split_path(p);
    const double s = *p.sigma;
    for (double t : {0.05, 0.13, 0.5, 0.8})
        for (double off : {0.0, 0.004, 0.01, 0.03}) {
            const Vec3 q{off, 0.5 * off, 0.02};
            const auto r = src.right().at(t), l = src.left().at(t);
            const double d = std::min(norm(q - r.x), norm(q - l.x));
            const double bound = p.coupling * gauss_density(d, s);
            for (double c : delta_current(src, {t, q})) EXPECT_LE(std::abs(c), bound * (1 + 1e-12));
        }
}

TEST(DeltaCurrent, ScalesLinearlyWithCoupling) {
    const auto src = make_split_path(base_params());
    const auto scaled = src.with_coupling_scaled(2.0);
    const SpacetimePoint x{0.2, {0.001, 0.002, 0.03}};
    const auto a = delta_current(src, x), b = delta_current(scaled, x);
    for (int m = 0; m < 4; ++m) EXPECT_EQ(b[m], 2.0 * a[m]);
}

TEST(DeltaStress, SymmetricAndDominatedByDensity) {
    auto p = base_params();
    p.field = FieldType::GR;
    p.coupling = 1.0;
    // Peak speed 0.01 reached at mid-ramp t = tau / 2.
    p.separation = 0.01 * 0.25;
    p.sigma = p.separation / 20;
    const auto src = make_split_path(p);
    const double t = 0.125;
    const auto k = src.right().at(t);
    ASSERT_NEAR(norm(k.v), 0.01, 1e-6);
    const auto T = delta_stress(src, {t, k.x});
    for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) EXPECT_EQ(T[m][n], T[n][m]);
    EXPECT_NEAR(std::abs(T[0][3]) / T[0][0], norm(k.v), 1e-12);
    EXPECT_NEAR(std::abs(T[3][3]) / T[0][0], dot(k.v, k.v), 1e-12);
    EXPECT_NEAR(std::abs(T[0][3]) / T[0][0], 0.01, 1e-6);
    EXPECT_NEAR(std::abs(T[3][3]) / T[0][0], 1e-4, 1e-7);
}

TEST(DeltaStress, StaticBranchesOnlyHaveDensity) {
    auto p = base_params();
    p.field = FieldType::GR;
    const auto src = make_split_path(p);
    const auto T = delta_stress(src, {0.5, {0.001, 0, 0.05}});
    EXPECT_GT(T[0][0], 0);
    for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) {
            if (m || n) {
                EXPECT_EQ(T[m][n], 0.0);
            }
        }
    p.separation = 0;
    const auto zero = delta_stress(make_split_path(p), {0.5, {0.001, 0, 0.0}});
    for (const auto& row : zero)
        for (double c : row) EXPECT_EQ(c, 0.0);
}

TEST(BranchedSource, RejectsUnclosedOrMismatchedBranches) {
    std::vector<double> t{0, 0.5, 1};
    std::vector<Vec3> v(3);
    std::vector<Vec3> xr{{0, 0, 0}, {0, 0, 0.1}, {0, 0, 0}};
    std::vector<Vec3> xl{{0, 0, 0}, {0, 0, -0.1}, {0, 0, 0.01}};
    EXPECT_THROW(BranchedSource(Worldline(t, xr, v, 1, 0.01), Worldline(t, xl, v, 1, 0.01), FieldType::EM, Label::A),
                 Error);
    xl.back() = {0, 0, 0};
    EXPECT_THROW(BranchedSource(Worldline(t, xr, v, 1, 0.01), Worldline(t, xl, v, 2, 0.01), FieldType::EM, Label::A),
                 Error);
    EXPECT_NO_THROW(
        BranchedSource(Worldline(t, xr, v, 1, 0.01), Worldline(t, xl, v, 1, 0.01), FieldType::EM, Label::A));
}
