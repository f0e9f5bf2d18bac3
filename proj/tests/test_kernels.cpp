#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "infl/kernels.hpp"
#include "infl/quadrature.hpp"

using namespace infl;

namespace {

constexpr double pi = std::numbers::pi;

// Composite Gauss-Legendre integral of f over [a, b].
template <class F>
double quad(F f, double a, double b, int panels = 400, int n = 16) {
    const GaussRule& g = gauss_legendre(n);
    const double w = (b - a) / panels;
    double s = 0;
    for (int i = 0; i < panels; ++i)
        for (int j = 0; j < n; ++j) s += 0.5 * w * g.w[j] * f(a + w * (i + 0.5 * (1 + g.x[j])));
    return s;
}

KernelSpec em_spec() { return KernelSpec{}; }

KernelSpec gr_spec(double G = 1e-3) {
    KernelSpec k;
    k.field = FieldType::GR;
    k.gravitational_constant = G;
    return k;
}

Tensor4 unit00() {
    Tensor4 t{};
    t[0][0] = 1;
    return t;
}

}  // namespace

TEST(RetardedScalar, SupportedOnlyOnTheFutureCone) {
    const auto k = em_spec();
    EXPECT_EQ(retarded_scalar(k, -0.5, 1.0), 0.0);
    EXPECT_EQ(retarded_scalar(k, 2.0, 1.0), 0.0);
    EXPECT_TRUE(std::isinf(retarded_scalar(k, 1.0, 1.0)));
    EXPECT_THROW(retarded_scalar(k, 1.0, 0.0), Error);
    try {
        retarded_scalar(k, 1.0, 0.0);
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "coincident spatial points");
    }
}

TEST(RetardedScalar, SmearedValueOnTheCone) {
    auto k = em_spec();
    k.smearing_width = 0.1;
    const double expected = 1.0 / (4 * pi) / std::sqrt(2 * pi * 0.01);
    EXPECT_NEAR(retarded_scalar(k, 1.0, 1.0), expected, 1e-14 * expected);
}

TEST(RetardedScalar, SmearedNormalizationAndTailBound) {
    for (double sk : {0.05, 0.3})
        for (double r : {0.2, 1.0, 3.0}) {
            auto k = em_spec();
            k.smearing_width = sk;
            const double integral =
                quad([&](double dt) { return retarded_scalar(k, dt, r) * 4 * pi * r; }, r - 15 * sk, r + 15 * sk);
            EXPECT_NEAR(integral, 1.0, 1e-12);
            for (double dt : {-0.5, -0.1, 0.0}) {
                const double bound = std::exp(-(r - dt) * (r - dt) / (2 * sk * sk));
                EXPECT_LE(retarded_scalar(k, dt, r) * std::sqrt(2 * pi) * sk * 4 * pi * r, bound * (1 + 1e-12));
            }
        }
}

TEST(HadamardScalar, MatchesDirectCutoffIntegral) {
    const double K = 50;
    for (double dt : {0.0, 0.03, 0.4, 1.3})
        for (double r : {1e-3, 0.05, 0.7}) {
            const double direct = quad([&](double k) { return std::cos(k * dt) * std::sin(k * r); }, 0, K, 200, 16) /
                                  (2 * pi * pi * r);
            EXPECT_NEAR(hadamard_scalar(K, dt, r), direct, 1e-10 * std::max(1.0, std::abs(direct)));
        }
    // The coincidence branch joins smoothly to the general formula.
    for (double dt : {0.0, 1e-6, 0.2}) {
        const double a = hadamard_scalar(K, dt, 0.0), b = hadamard_scalar(K, dt, 1e-6);
        EXPECT_NEAR(a, b, 1e-6 * std::abs(a));
    }
}

TEST(HadamardContracted, TensorContractionsByHand) {
    const SpacetimePoint x{0.3, {0, 0, 0}}, y{0.1, {0.2, 0, 0}};
    const double H = hadamard_scalar(em_spec(), x.t - y.t, norm(x.x - y.x));
    const FourVector e0{1, 0, 0, 0}, zero{};
    // The EM factor carries +eta, so the pure-density contraction is -H.
    EXPECT_NEAR(hadamard_contracted(em_spec(), e0, e0, x, y), -H, 1e-15 * std::abs(H));
    EXPECT_EQ(hadamard_contracted(em_spec(), e0, zero, x, y), 0.0);
    const auto g = gr_spec();
    EXPECT_NEAR(hadamard_contracted(g, unit00(), unit00(), x, y), 0.5 * g.kappa_squared() * H,
                1e-14 * std::abs(g.kappa_squared() * H));
    EXPECT_EQ(hadamard_contracted(g, Tensor4{}, unit00(), x, y), 0.0);
}

TEST(HadamardContracted, SymmetricUnderSwap) {
    const SpacetimePoint x{0.4, {0.1, 0, 0.02}}, y{0.15, {-0.05, 0.03, 0}};
    const FourVector a{1, 0.1, -0.2, 0.05}, b{0.7, 0.0, 0.3, -0.1};
    EXPECT_DOUBLE_EQ(hadamard_contracted(em_spec(), a, b, x, y), hadamard_contracted(em_spec(), b, a, y, x));
    auto full = gr_spec();
    full.projection = StressProjection::Full;
    const Tensor4 ta = outer(a, a), tb = outer(b, b);
    EXPECT_DOUBLE_EQ(hadamard_contracted(full, ta, tb, x, y), hadamard_contracted(full, tb, ta, y, x));
}

TEST(HadamardContracted, RejectsMismatchedRanks) {
    const SpacetimePoint x{}, y{0.1, {0.1, 0, 0}};
    EXPECT_THROW(hadamard_contracted(em_spec(), unit00(), unit00(), x, y), Error);
    EXPECT_THROW(hadamard_contracted(gr_spec(), FourVector{1, 0, 0, 0}, FourVector{1, 0, 0, 0}, x, y), Error);
}

TEST(RetardedTensorFactor, SignatureAndTraceReversal) {
    const auto em = retarded_tensor_factor(em_spec());
    EXPECT_EQ(em(0, 0), -1.0);
    EXPECT_EQ(em(1, 1), 1.0);
    const auto g = gr_spec(0.7);
    const auto P = retarded_tensor_factor(g);
    const double k2 = 32 * pi * 0.7;
    EXPECT_NEAR(P(0, 0, 0, 0), 0.5 * k2, 1e-14 * k2);
    for (int r = 0; r < 4; ++r)
        for (int s = 0; s < 4; ++s) {
            double tr = 0;
            for (int m = 0; m < 4; ++m) tr += eta(m, m) * P(m, m, r, s);
            EXPECT_NEAR(tr, -k2 * eta(r, s), 1e-12 * k2);
        }
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d) {
                    EXPECT_EQ(P(a, b, c, d), P(b, a, c, d));
                    EXPECT_EQ(P(a, b, c, d), P(a, b, d, c));
                    EXPECT_EQ(P(a, b, c, d), P(c, d, a, b));
                }
}

TEST(ConeKernel, MatchesShellAverageOfSmearedBlobs) {
    // delta(dt - |r|)/(4 pi |r|) averaged over a Gaussian offset of width s:
    // (dt / 4 pi) * integral over the sphere of radius dt of the Gaussian density.
    for (double s : {0.005, 0.02})
        for (double d : {0.0, 0.01, 0.2})
            for (double dt : {0.004, 0.012, 0.2, 0.21}) {
                const double oracle = dt / (4 * pi) * 2 * pi *
                                      quad(
                                          [&](double mu) {
                                              const double q2 = dt * dt + d * d - 2 * dt * d * mu;
                                              return std::exp(-q2 / (2 * s * s)) / std::pow(2 * pi * s * s, 1.5);
                                          },
                                          -1, 1, 200);
                const double v = cone_kernel(dt, d, s);
                EXPECT_NEAR(v, oracle, 1e-9 * std::max(std::abs(oracle), 1e-3)) << s << " " << d << " " << dt;
            }
    EXPECT_EQ(cone_kernel(-0.1, 0.2, 0.01), 0.0);
}

TEST(ConeKernel, TemporalSmearingIsAConvolution) {
    const double s = 0.01, sk = 0.02, d = 0.3;
    for (double dt : {0.25, 0.3, 0.33}) {
        const double conv = quad(
            [&](double tau) {
                return std::exp(-0.5 * tau * tau / (sk * sk)) / (std::sqrt(2 * pi) * sk) * cone_kernel(dt - tau, d, s);
            },
            -12 * sk, 12 * sk, 800);
        EXPECT_NEAR(cone_kernel(dt, d, s, sk), conv, 1e-9 * std::abs(conv));
    }
}

TEST(KernelSpec, ValidatesParameters) {
    auto k = gr_spec(0.0);
    EXPECT_THROW(k.validate(), Error);
    k = em_spec();
    k.uv_cutoff = -1;
    EXPECT_THROW(k.validate(), Error);
    k = em_spec();
    k.smearing_width = NAN;
    EXPECT_THROW(k.validate(), Error);
    EXPECT_NEAR(gr_spec(1.0).kappa_squared(), 32 * pi, 1e-13);
}
