#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <variant>

#include "core.hpp"

namespace infl {

/** Which part of the stress tensor couples to the gravitational kernel. */
enum class StressProjection {
    /** Only the energy density T^00 (static-mass coupling). */
    Newtonian,
    /** All ten components contracted with the de Donder tensor. */
    Full
};

/** @brief Field-kernel configuration. */
struct KernelSpec {
    FieldType field = FieldType::EM;
    double gravitational_constant = 1.0;
    /** Temporal smearing of the light-cone delta. */
    double smearing_width = 0.0;
    /** Momentum cutoff; must satisfy k_max * sigma >= 10 for every source. */
    double uv_cutoff = 2000.0;
    StressProjection projection = StressProjection::Newtonian;

    double kappa_squared() const { return 32.0 * std::numbers::pi * gravitational_constant; }

    void validate() const {
        if (field == FieldType::GR && !(gravitational_constant > 0))
            throw Error("gravitational constant must be positive");
        if (!(smearing_width >= 0) || !std::isfinite(smearing_width)) throw Error("kernel smearing must be >= 0");
        if (!(uv_cutoff > 0) || !std::isfinite(uv_cutoff)) throw Error("uv_cutoff must be positive");
    }
};

/** Source value at a point: a 4-vector current or a symmetric stress tensor. */
using SourceValue = std::variant<FourVector, Tensor4>;

/**
 * Massless retarded kernel delta_{sigma_k}(dt - r) / (4 pi r). With zero
 * smearing the delta is exact: 0 off the cone, +inf on it.
 */
inline double retarded_scalar(const KernelSpec& spec, double dt, double r) {
    if (!(r > 0)) throw Error("coincident spatial points");
    const double sk = spec.smearing_width;
    if (sk == 0) return dt == r ? std::numeric_limits<double>::infinity() : 0.0;
    const double u = (dt - r) / sk;
    return std::exp(-0.5 * u * u) / (std::sqrt(2 * std::numbers::pi) * sk) / (4 * std::numbers::pi * r);
}

/**
 * Retarded kernel averaged over two Gaussian blobs whose centers are a
 * distance d apart (combined width s), optionally with temporal smearing sk.
 * Vanishes for dt <= 0 when sk = 0.
 */
inline double cone_kernel(double dt, double d, double s, double sk = 0.0) {
    constexpr double inv_sqrt2pi = 0.398942280401432677939946059934381868;
    if (sk == 0) {
        if (dt <= 0) return 0.0;
        const double g = std::exp(-0.5 * (dt - d) * (dt - d) / (s * s));
        if (d == 0) return inv_sqrt2pi / s * g * 2 * dt / (s * s) / (4 * std::numbers::pi);
        return inv_sqrt2pi / s * g * -std::expm1(-2 * dt * d / (s * s)) / (4 * std::numbers::pi * d);
    }
    const double V = s * s + sk * sk, v = s * s * sk * sk / V;
    auto term = [&](double c) {
        const double mu = (dt * s * s + c * sk * sk) / V;
        return std::exp(-0.5 * (dt - c) * (dt - c) / V) * 0.5 * std::erfc(-mu / std::sqrt(2 * v));
    };
    const double dd = std::max(d, 1e-300);
    return inv_sqrt2pi / std::sqrt(V) * (term(d) - term(-d)) / (4 * std::numbers::pi * dd);
}

/**
 * Symmetric two-point function of a massless scalar with a sharp momentum
 * cutoff K: (1/(2 pi^2 r)) int_0^K cos(k dt) sin(k r) dk.
 */
inline double hadamard_scalar(double K, double dt, double r) {
    auto phi = [K](double x) {
        if (x == 0) return 0.0;
        const double s = std::sin(0.5 * K * x);
        return 2 * s * s / x;
    };
    const double c = 1.0 / (4 * std::numbers::pi * std::numbers::pi);
    if (r < 1e-7 / K) {
        double dphi;
        if (std::abs(K * dt) < 1e-4) {
            dphi = 0.5 * K * K * (1 - K * K * dt * dt / 4.0);
        } else {
            const double s = std::sin(0.5 * K * dt);
            dphi = K * std::sin(K * dt) / dt - 2 * s * s / (dt * dt);
        }
        return 2 * c * dphi;
    }
    return c / r * (phi(r + dt) + phi(r - dt));
}

inline double hadamard_scalar(const KernelSpec& spec, double dt, double r) {
    return hadamard_scalar(spec.uv_cutoff, dt, r);
}

/** @brief Constant tensor factor multiplying the scalar kernels. */
struct TensorFactor {
    FieldType field;
    double kappa2;

    double operator()(int mu, int nu) const { return eta(mu, nu); }
    double operator()(int mu, int nu, int rho, int sigma) const {
        return kappa2 * 0.5 *
               (eta(mu, rho) * eta(nu, sigma) + eta(mu, sigma) * eta(nu, rho) - eta(mu, nu) * eta(rho, sigma));
    }
};

inline TensorFactor retarded_tensor_factor(const KernelSpec& spec) { return {spec.field, spec.kappa_squared()}; }

/** a^mu eta_{mu nu} b^nu. */
template <class T>
T minkowski_dot(const std::array<T, 4>& a, const std::array<T, 4>& b) {
    return -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

/** a^{mu nu} P_{mu nu rho sigma} b^{rho sigma} for symmetric tensors, without kappa^2. */
inline double de_donder_contract(const Tensor4& a, const Tensor4& b) {
    double ab = 0, ta = 0, tb = 0;
    for (int m = 0; m < 4; ++m) {
        ta += eta(m, m) * a[m][m];
        tb += eta(m, m) * b[m][m];
        for (int n = 0; n < 4; ++n) ab += eta(m, m) * eta(n, n) * a[m][n] * b[m][n];
    }
    return ab - 0.5 * ta * tb;
}

/** Keeps only the components that couple under the configured projection. */
inline Tensor4 project_stress(const KernelSpec& spec, const Tensor4& t) {
    if (spec.projection == StressProjection::Full) return t;
    Tensor4 p{};
    p[0][0] = t[0][0];
    return p;
}

/** S_x . K . S_y for matching source ranks. */
inline double contract_sources(const KernelSpec& spec, const SourceValue& sx, const SourceValue& sy) {
    if (spec.field == FieldType::EM) {
        const auto* a = std::get_if<FourVector>(&sx);
        const auto* b = std::get_if<FourVector>(&sy);
        if (!a || !b) throw Error("EM kernel expects 4-vector sources");
        return minkowski_dot(*a, *b);
    }
    const auto* a = std::get_if<Tensor4>(&sx);
    const auto* b = std::get_if<Tensor4>(&sy);
    if (!a || !b) throw Error("GR kernel expects rank-2 tensor sources");
    return spec.kappa_squared() * de_donder_contract(project_stress(spec, *a), project_stress(spec, *b));
}

/** Integrand factor S(x) . K . S(y) H(x - y) of the symmetric correlator. */
inline double hadamard_contracted(const KernelSpec& spec, const SourceValue& sx, const SourceValue& sy,
                                  const SpacetimePoint& x, const SpacetimePoint& y) {
    const double c = contract_sources(spec, sx, sy);
    if (c == 0) return 0.0;
    return c * hadamard_scalar(spec, x.t - y.t, norm(x.x - y.x));
}

/**
 * Integrand factor S(x) . G^r(x, y) . S(y). The scalar retarded function of
 * -i[phi(x), phi(y)] theta(x0 - y0) is -delta(dt - r)/(4 pi r).
 */
inline double retarded_contracted(const KernelSpec& spec, const SourceValue& sx, const SourceValue& sy,
                                  const SpacetimePoint& x, const SpacetimePoint& y) {
    const double c = contract_sources(spec, sx, sy);
    if (c == 0) return 0.0;
    return -c * retarded_scalar(spec, x.t - y.t, norm(x.x - y.x));
}

}  // namespace infl
