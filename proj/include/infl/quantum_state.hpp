#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>

#include "core.hpp"
#include "functionals.hpp"

namespace infl {

using Matrix4c = Eigen::Matrix<std::complex<double>, 4, 4>;

/** Optional common local phases a (particle A) and b (particle B). */
struct CommonPhases {
    double a = 0;
    double b = 0;
};

/**
 * Raw density-matrix entries over the basis |P Q>, index 2P + Q with R = 0
 * and L = 1. Each entry is <Psi_{P'Q'}|Psi_{PQ}>/4 for the coherent field
 * states left behind by the branch pair (P, Q).
 */
inline Matrix4c density_matrix_entries(const InfluenceFunctionals& f, const CommonPhases& ph = {}) {
    Matrix4c rho;
    const double eps[2] = {1.0, -1.0};
    for (int r = 0; r < 4; ++r) {
        const int P = r / 2, Q = r % 2;
        for (int c = 0; c < 4; ++c) {
            const int Pp = c / 2, Qp = c % 2;
            const double al = 0.5 * (eps[Pp] - eps[P]), be = 0.5 * (eps[Qp] - eps[Q]);
            const double ga = 0.5 * (eps[Pp] + eps[P]), de = 0.5 * (eps[Qp] + eps[Q]);
            const double mag = -(al * al * f.gamma_a + be * be * f.gamma_b + al * be * f.gamma_c);
            const double arg = -al * ph.a - be * ph.b - 0.5 * al * de * f.phi_ab - 0.5 * be * ga * f.phi_ba;
            rho(r, c) = 0.25 * std::exp(mag) * std::polar(1.0, arg);
        }
    }
    return rho;
}

/** Transposes the B indices: <P Q|rho|P' Q'> -> <P Q'|rho|P' Q>. */
inline Matrix4c partial_transpose(const Matrix4c& m) {
    Matrix4c t;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
            const int P = r / 2, Q = r % 2, Pp = c / 2, Qp = c % 2;
            t(2 * P + Qp, 2 * Pp + Q) = m(r, c);
        }
    return t;
}

inline Eigen::Vector4d hermitian_eigenvalues(const Matrix4c& m) {
    Eigen::SelfAdjointEigenSolver<Matrix4c> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

/** @brief Validated two-qubit density matrix. */
class TwoQubitState {
public:
    explicit TwoQubitState(const Matrix4c& m) : m_(m) {
        if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > 1e-12) throw Error("density matrix is not Hermitian");
        if (std::abs(m_.trace() - std::complex<double>(1.0)) > 1e-12) throw Error("density matrix trace differs from 1");
        if (hermitian_eigenvalues(m_).minCoeff() < -1e-10) throw Error("density matrix is not positive semidefinite");
    }
    const Matrix4c& matrix() const { return m_; }
    Matrix4c partial_transpose() const { return infl::partial_transpose(m_); }
    Eigen::Vector4d partial_transpose_spectrum() const { return hermitian_eigenvalues(partial_transpose()); }

    /** Reduced state of A (trace over B). */
    Eigen::Matrix2cd reduced_a() const {
        Eigen::Matrix2cd r = Eigen::Matrix2cd::Zero();
        for (int P = 0; P < 2; ++P)
            for (int Pp = 0; Pp < 2; ++Pp)
                for (int Q = 0; Q < 2; ++Q) r(P, Pp) += m_(2 * P + Q, 2 * Pp + Q);
        return r;
    }
    /** Conditional state of B given A on branch P, normalized. */
    Eigen::Matrix2cd conditional_b(int P) const {
        Eigen::Matrix2cd r;
        for (int Q = 0; Q < 2; ++Q)
            for (int Qp = 0; Qp < 2; ++Qp) r(Q, Qp) = m_(2 * P + Q, 2 * P + Qp);
        return r / r.trace();
    }

private:
    Matrix4c m_;
};

inline TwoQubitState build_density_matrix(const InfluenceFunctionals& f, const CommonPhases& ph = {}) {
    f.validate(1e-12);
    return TwoQubitState(density_matrix_entries(f, ph));
}

namespace detail {

/** 1 - e^{-S} cosh(gc) without cancellation. */
inline double one_minus_damped_cosh(double S, double gc) {
    const double sh = std::sinh(0.5 * gc);
    return -std::expm1(-S) - std::exp(-S) * 2 * sh * sh;
}

inline double radicand(const InfluenceFunctionals& f, double trig2) {
    const double S = f.gamma_a + f.gamma_b;
    const double d = std::exp(-f.gamma_a) - std::exp(-f.gamma_b);
    const double sh = std::exp(-S) * std::sinh(f.gamma_c);
    return d * d + 4 * std::exp(-S) * trig2 + sh * sh;
}

inline double mean_phase_sin2(const InfluenceFunctionals& f) {
    const double s = std::sin(0.25 * (f.phi_ab + f.phi_ba));
    return s * s;
}

}  // namespace detail

/** @brief Closed-form partial-transpose eigenvalues (lambda_pm, lambda'_pm). */
struct PartialTransposeSpectrum {
    double lambda_minus, lambda_plus, lambda_prime_minus, lambda_prime_plus;
    double min() const { return std::min({lambda_minus, lambda_plus, lambda_prime_minus, lambda_prime_plus}); }
};

/**
 * sinh(ga) sinh(gb) - sinh^2(gc/2) - sin^2((phi_ab + phi_ba)/4); the sign of
 * lambda_min. With phi_ab = 0 the phase term is sin^2(phi_ba/4).
 */
inline double entanglement_indicator(const InfluenceFunctionals& f) {
    const double sc = std::sinh(0.5 * f.gamma_c);
    return std::sinh(f.gamma_a) * std::sinh(f.gamma_b) - sc * sc - detail::mean_phase_sin2(f);
}

/**
 * Minimum-eigenvalue formula of the partially transposed state,
 * (1/4)[1 - e^{-S} cosh gc - sqrt(rad)], evaluated in the equivalent
 * factored form e^{-S} * indicator / (1 - e^{-S} cosh gc + sqrt(rad)).
 */
inline double lambda_min_closed_form(const InfluenceFunctionals& f) {
    const double S = f.gamma_a + f.gamma_b;
    const double den = detail::one_minus_damped_cosh(S, f.gamma_c) +
                       std::sqrt(std::max(0.0, detail::radicand(f, detail::mean_phase_sin2(f))));
    if (den == 0) return 0.0;
    return std::exp(-S) * entanglement_indicator(f) / den;
}

inline PartialTransposeSpectrum partial_transpose_spectrum_closed_form(const InfluenceFunctionals& f) {
    const double S = f.gamma_a + f.gamma_b, es = std::exp(-S);
    const double s2 = detail::mean_phase_sin2(f), c2 = 1 - s2;
    const double x = es * std::cosh(f.gamma_c);
    const double rm = std::sqrt(std::max(0.0, detail::radicand(f, s2)));
    const double rp = std::sqrt(std::max(0.0, detail::radicand(f, c2)));
    const double sc = std::sinh(0.5 * f.gamma_c);
    const double pos = std::sinh(f.gamma_a) * std::sinh(f.gamma_b) + sc * sc + s2;
    const double lpm = (1 + x + rp) > 0 ? es * pos / (1 + x + rp) : 0.0;
    return {lambda_min_closed_form(f), 0.25 * (detail::one_minus_damped_cosh(S, f.gamma_c) + rm), lpm,
            0.25 * (1 + x + rp)};
}

/** Small-coupling form (1/4)[ga + gb - sqrt((ga + gb)^2 - 4(ga gb - gc^2/4 - phi_ba^2/16))]. */
inline double lambda_min_small_coupling(const InfluenceFunctionals& f) {
    const double s = f.gamma_a + f.gamma_b;
    const double det = f.gamma_a * f.gamma_b - 0.25 * f.gamma_c * f.gamma_c - f.phi_ba * f.phi_ba / 16.0;
    const double d = f.gamma_a - f.gamma_b;
    double rad = d * d + f.gamma_c * f.gamma_c + f.phi_ba * f.phi_ba / 4.0;
    const double direct = s * s - 4 * det;
    if (direct < -1e-14) throw Error("small-coupling radicand is negative");
    rad = std::max(rad, 0.0);
    const double root = std::sqrt(rad);
    if (s + root == 0) return 0.0;
    return det / (s + root);
}

inline double visibility(const InfluenceFunctionals& f) {
    return std::exp(-f.gamma_a) * std::abs(std::cos(0.5 * f.phi_ab));
}

inline double distinguishability(const InfluenceFunctionals& f) {
    return std::exp(-f.gamma_b) * std::abs(std::sin(0.5 * f.phi_ba));
}

struct ComplementarityCheck {
    double sum;
    bool holds;
};

inline ComplementarityCheck check_complementarity(const InfluenceFunctionals& f) {
    const double v = visibility(f), d = distinguishability(f);
    const double sum = v * v + d * d;
    return {sum, sum <= 1 + 1e-12};
}

struct UncertaintyCheck {
    double lhs, rhs;
    bool holds;
};

inline UncertaintyCheck check_sr(const InfluenceFunctionals& f) {
    const double lhs = f.gamma_a * f.gamma_b;
    const double dp = f.phi_ab - f.phi_ba;
    const double rhs = 0.25 * f.gamma_c * f.gamma_c + dp * dp / 16.0;
    return {lhs, rhs, lhs >= rhs - 1e-12};
}

/** @brief Entanglement and complementarity diagnostics of one state. */
struct StateDiagnostics {
    double lambda_min = 0;
    double negativity = 0;
    double visibility = 1;
    double distinguishability = 0;
    double complementarity_sum = 1;
    double sr_lhs = 0;
    double sr_rhs = 0;
    bool sr_holds = true;
    bool complementarity_holds = true;
    bool entangled = false;
};

inline StateDiagnostics diagnose(const InfluenceFunctionals& f) {
    StateDiagnostics d;
    d.lambda_min = lambda_min_closed_form(f);
    d.negativity = std::max(-d.lambda_min, 0.0);
    d.visibility = visibility(f);
    d.distinguishability = distinguishability(f);
    const auto c = check_complementarity(f);
    d.complementarity_sum = c.sum;
    d.complementarity_holds = c.holds;
    const auto u = check_sr(f);
    d.sr_lhs = u.lhs;
    d.sr_rhs = u.rhs;
    d.sr_holds = u.holds;
    d.entangled = d.lambda_min < 0;
    return d;
}

}  // namespace infl
