#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "infl/inequality_lab.hpp"
#include "infl/quantum_state.hpp"

using namespace infl;

namespace {

constexpr double pi = std::numbers::pi;

InfluenceFunctionals F5(double ga, double gb, double gc, double pab, double pba) {
    return InfluenceFunctionals::make(ga, gb, gc, pab, pba);
}

std::array<double, 4> sorted(std::array<double, 4> v) {
    std::sort(v.begin(), v.end());
    return v;
}

// Trace norm of a 2x2 Hermitian matrix.
double trace_norm(const Eigen::Matrix2cd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(m);
    return es.eigenvalues().cwiseAbs().sum();
}

// Causal-form minimum eigenvalue written out term by term.
double lambda_causal_naive(double ga, double gb, double gc, double pba) {
    const double s = std::sin(pba / 4), e = std::exp(-ga - gb), d = std::exp(-ga) - std::exp(-gb);
    const double sh = std::sinh(gc);
    return 0.25 * (1 - e * std::cosh(gc) - std::sqrt(d * d + 4 * e * s * s + e * e * sh * sh));
}

}  // namespace

TEST(DensityMatrix, NoInteractionGivesProductOfPlusStates) {
    const auto rho = build_density_matrix(F5(0, 0, 0, 0, 0));
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) EXPECT_NEAR(std::abs(rho.matrix()(r, c) - 0.25), 0, 1e-15);
}

TEST(DensityMatrix, StrongDephasingKillsACoherences) {
    const auto rho = build_density_matrix(F5(60, 0, 0, 0, 0)).matrix();
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
            if (r / 2 != c / 2) {
                EXPECT_LT(std::abs(rho(r, c)), 1e-25);
            } else {
                EXPECT_NEAR(std::abs(rho(r, c)), 0.25, 1e-15);
            }
        }
}

TEST(DensityMatrix, ClosedFormSpectrumMatchesDenseEigensolver) {
    const auto f = F5(0.3, 0.2, 0.1, 0, 0.4);
    const auto dense = build_density_matrix(f).partial_transpose_spectrum();
    const auto cf = partial_transpose_spectrum_closed_form(f);
    const auto a = sorted({dense[0], dense[1], dense[2], dense[3]});
    const auto b = sorted({cf.lambda_minus, cf.lambda_plus, cf.lambda_prime_minus, cf.lambda_prime_plus});
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(a[i], b[i], 1e-10);
    // Random tuples need not satisfy the uncertainty relation, so the raw
    // matrix may fail positivity; its partial-transpose spectrum is still defined.
    for (int i = 0; i < 200; ++i) {
        const auto g = random_functionals(11, i);
        const auto d = hermitian_eigenvalues(partial_transpose(density_matrix_entries(g)));
        const auto c = partial_transpose_spectrum_closed_form(g);
        EXPECT_NEAR(d.minCoeff(), c.min(), 1e-10);
        EXPECT_NEAR(std::min(d.minCoeff(), 0.0), std::min(c.lambda_minus, 0.0), 1e-10);
    }
}

// The four-eigenvalue formula labels lambda_- as the minimum; when the state is
// separable another eigenvalue can be smaller. The signs always agree.
TEST(DensityMatrix, LambdaMinusIsNotAlwaysTheSmallestEigenvalue) {
    const auto f = F5(0.3, 0.2, 0.1, 0, 0.4);
    const auto dense = build_density_matrix(f).partial_transpose_spectrum();
    EXPECT_NEAR(dense.minCoeff(), 0.014150, 1e-6);
    EXPECT_NEAR(lambda_min_closed_form(f), 0.051550, 1e-6);
    EXPECT_GT(dense.minCoeff(), 0.0);
}

TEST(DensityMatrix, ValidStateAndCommonPhasesDoNotChangeDiagnostics) {
    const auto f = F5(0.4, 0.7, -0.3, 0.2, 1.1);
    const auto plain = build_density_matrix(f);
    const auto turned = build_density_matrix(f, {0.9, -2.3});
    const auto s1 = plain.partial_transpose_spectrum(), s2 = turned.partial_transpose_spectrum();
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(s1[i], s2[i], 1e-13);
    EXPECT_NEAR(std::abs(plain.reduced_a()(1, 0)), std::abs(turned.reduced_a()(1, 0)), 1e-15);
    EXPECT_NEAR(plain.matrix().trace().real(), 1.0, 1e-14);
    EXPECT_GE(hermitian_eigenvalues(plain.matrix()).minCoeff(), -1e-12);
}

TEST(DensityMatrix, UncertaintyRelationImpliesPositivity) {
    int checked = 0;
    for (int i = 0; i < 3000; ++i) {
        const auto g = random_functionals(21, i);
        if (!check_sr(g).holds) continue;
        EXPECT_GE(hermitian_eigenvalues(density_matrix_entries(g)).minCoeff(), -1e-10) << i;
        ++checked;
    }
    EXPECT_GT(checked, 100);
}

TEST(DensityMatrix, RejectsInvalidFunctionals) {
    EXPECT_THROW(build_density_matrix(F5(-0.1, 0.2, 0, 0, 0)), Error);
    EXPECT_THROW(build_density_matrix(F5(0.1, 0.1, 0.5, 0, 0)), Error);
    Matrix4c m = Matrix4c::Identity() * 0.5;
    EXPECT_THROW(TwoQubitState{m}, Error);
}

TEST(LambdaMin, TrivialValues) {
    EXPECT_EQ(lambda_min_closed_form(F5(0, 0, 0, 0, 0)), 0.0);
    EXPECT_NEAR(lambda_min_closed_form(F5(0, 0, 0, pi, pi)), -0.5, 1e-15);
    EXPECT_NEAR(build_density_matrix(F5(0, 0, 0, pi, pi)).partial_transpose_spectrum().minCoeff(), -0.5, 1e-14);
}

TEST(LambdaMin, ReducesToCausalFormWhenPhiAbVanishes) {
    for (int i = 0; i < 500; ++i) {
        auto g = random_functionals(5, i);
        g = F5(g.gamma_a, g.gamma_b, g.gamma_c, 0, g.phi_ba);
        const double naive = lambda_causal_naive(g.gamma_a, g.gamma_b, g.gamma_c, g.phi_ba);
        EXPECT_NEAR(lambda_min_closed_form(g), naive, 1e-12);
        EXPECT_NEAR(lambda_min_factored(g), lambda_min_closed_form(g), 1e-12);
    }
}

TEST(LambdaMin, NegativityIffPartialTransposeNotPositive) {
    int entangled = 0;
    for (int i = 0; i < 2000; ++i) {
        const auto g = random_functionals(3, i);
        const auto d = diagnose(g);
        const double dense = hermitian_eigenvalues(partial_transpose(density_matrix_entries(g))).minCoeff();
        EXPECT_NEAR(d.negativity, std::max(-d.lambda_min, 0.0), 0);
        if (std::abs(dense) > 1e-9) {
            EXPECT_EQ(d.negativity > 0, dense < 0);
        }
        entangled += d.entangled;
    }
    EXPECT_GT(entangled, 0);
}

TEST(SmallCoupling, TrivialValues) {
    EXPECT_EQ(lambda_min_small_coupling(F5(0, 0, 0, 0, 0)), 0.0);
    EXPECT_NEAR(lambda_min_small_coupling(F5(0.01, 0.01, 0, 0, 0)), 0.005, 1e-17);
    InfluenceFunctionals bad{0.1, 0.1, 10.0, 0, 0, 0};
    EXPECT_NO_THROW(lambda_min_small_coupling(bad));  // radicand stays a sum of squares
}

// With every functional scaled by eps the gap closes as eps^2 (it is the
// next order of the expansion); in the coupling s, with functionals ~ s^2, as s^4.
TEST(SmallCoupling, ConvergenceOrderAgainstExactForm) {
    std::vector<double> eps{0.1, 0.05, 0.025}, gap;
    for (double e : eps) {
        const auto g = F5(0.3 * e, 0.2 * e, 0.1 * e, 0, 0.4 * e);
        gap.push_back(std::abs(lambda_min_closed_form(g) - lambda_min_small_coupling(g)));
    }
    const double order = std::log(gap[0] / gap[2]) / std::log(eps[0] / eps[2]);
    EXPECT_NEAR(order, 2.0, 0.05);
    EXPECT_GT(2 * order, 3.0);
}

TEST(Visibility, MatchesReducedStateDefinition) {
    EXPECT_EQ(visibility(F5(0, 0, 0, 0, 0)), 1.0);
    EXPECT_NEAR(visibility(F5(0.1, 0.1, 0, pi, 0)), 0.0, 1e-16);
    const auto f = F5(0.3, 0.1, 0.05, 0.4, 0.2);
    const double v = 2 * std::abs(build_density_matrix(f).reduced_a()(1, 0));
    EXPECT_NEAR(visibility(f), std::exp(-0.3) * std::cos(0.2), 1e-15);
    EXPECT_NEAR(v, visibility(f), 1e-14);
    double prev = 2;
    for (double ga = 0; ga < 3; ga += 0.25) {
        const double now = visibility(F5(ga, 0.1, 0, 0.4, 0));
        EXPECT_LT(now, prev);
        prev = now;
    }
}

TEST(Distinguishability, MatchesTraceDistanceOfConditionalStates) {
    EXPECT_EQ(distinguishability(F5(0.2, 0.2, 0, 0, 0)), 0.0);
    EXPECT_NEAR(distinguishability(F5(0.1, 0, 0, 0, pi)), 1.0, 1e-15);
    const auto f = F5(0.1, 0.2, 0.01, 0, 0.5);
    EXPECT_NEAR(distinguishability(f), std::exp(-0.2) * std::sin(0.25), 1e-15);
    const auto st = build_density_matrix(f);
    const double d = 0.5 * trace_norm(st.conditional_b(0) - st.conditional_b(1));
    EXPECT_NEAR(d, distinguishability(f), 1e-14);
}

TEST(Complementarity, Examples) {
    const auto zero = check_complementarity(F5(0, 0, 0, 0, 0));
    EXPECT_NEAR(zero.sum, 1.0, 1e-15);
    EXPECT_TRUE(zero.holds);
    const auto c = check_complementarity(F5(0.5, 0.5, 0, 0, pi / 2));
    const double s = std::sin(pi / 4);
    EXPECT_NEAR(c.sum, std::exp(-1.0) + std::exp(-1.0) * s * s, 1e-15);
    EXPECT_TRUE(c.holds);
}

TEST(SchrodingerRobertson, Examples) {
    const auto z = check_sr(F5(0, 0, 0, 0, 0));
    EXPECT_TRUE(z.holds);
    const auto u = check_sr(F5(0.5, 0.5, 0, 0, pi / 2));
    EXPECT_NEAR(u.lhs, 0.25, 1e-15);
    EXPECT_NEAR(u.rhs, pi * pi / 64, 1e-15);
    EXPECT_TRUE(u.holds);
    InfluenceFunctionals raw{0.01, 0.01, 1.0, 0, 0, 0};
    EXPECT_FALSE(check_sr(raw).holds);
}
