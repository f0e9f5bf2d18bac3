#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <vector>

#include "core.hpp"
#include "kernels.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "sources.hpp"

namespace infl {

/** @brief The five scalars that fix the two-particle state, plus theta. */
struct InfluenceFunctionals {
    double gamma_a = 0;
    double gamma_b = 0;
    double gamma_c = 0;
    double phi_ab = 0;
    double phi_ba = 0;
    double theta = 0;

    static InfluenceFunctionals make(double ga, double gb, double gc, double pab, double pba) {
        return {ga, gb, gc, pab, pba, 0.5 * (pab - pba)};
    }

    /** Throws unless gamma_a, gamma_b >= 0 and |gamma_c| <= 2 sqrt(gamma_a gamma_b) + tol. */
    void validate(double tol = 0) const {
        for (double v : {gamma_a, gamma_b, gamma_c, phi_ab, phi_ba, theta})
            if (!std::isfinite(v)) throw Error("functionals must be finite");
        if (gamma_a < -tol || gamma_b < -tol) throw Error("invariant violation: negative decoherence functional");
        const double cs = 2 * std::sqrt(std::max(0.0, gamma_a) * std::max(0.0, gamma_b));
        if (std::abs(gamma_c) > cs + tol) throw Error("invariant violation: |gamma_c| exceeds 2 sqrt(gamma_a gamma_b)");
    }
};

/** @brief Quadrature controls for the functionals. */
struct QuadratureOptions {
    double rel_tol = 1e-4;
    /** Multiplies the number of Gauss nodes per time segment. */
    double time_refine = 1.0;
    int workers = default_workers();
    int max_panels = 4000;
    /** Skip the axial Chebyshev tables and evaluate every direction directly. */
    bool direct_angular = false;
    /** Gauss nodes of the inner cone integral. */
    int cone_nodes = 64;
    /** Half-width of the inner cone window, in kernel widths. */
    double cone_width = 10.0;
};

/** @brief Functionals with error estimates and the commutator cross-check. */
struct FunctionalsReport {
    InfluenceFunctionals values;
    double err_gamma_a = 0, err_gamma_b = 0, err_gamma_c = 0, err_phi_ab = 0, err_phi_ba = 0;
    /** 2 Im W_AB, the momentum-space value of -i<[phi_A, phi_B]>. */
    double commutator = 0;
    double err_commutator = 0;
    double k_cut = 0;
    int k_panels = 0;
    bool converged = true;
};

namespace detail {

inline constexpr double two_pi_cubed = 248.05021344239856;  // (2 pi)^3

inline int component_count(const KernelSpec& spec) {
    if (spec.field == FieldType::EM) return 4;
    return spec.projection == StressProjection::Newtonian ? 1 : 10;
}

inline void pack_components(const KernelSpec& spec, const Vec3& v, double* u) {
    if (spec.field == FieldType::EM) {
        u[0] = 1;
        u[1] = v.x;
        u[2] = v.y;
        u[3] = v.z;
        return;
    }
    if (spec.projection == StressProjection::Newtonian) {
        u[0] = 1;
        return;
    }
    const FourVector q = four_velocity(v);
    int k = 0;
    for (int m = 0; m < 4; ++m)
        for (int n = m; n < 4; ++n) u[k++] = q[m] * q[n];
}

/** sum_ab x_a K_ab conj(y_b) over packed components. */
inline cplx contract_packed(const KernelSpec& spec, const cplx* x, const cplx* y) {
    if (spec.field == FieldType::EM)
        return -x[0] * std::conj(y[0]) + x[1] * std::conj(y[1]) + x[2] * std::conj(y[2]) + x[3] * std::conj(y[3]);
    const double k2 = spec.kappa_squared();
    if (spec.projection == StressProjection::Newtonian) return 0.5 * k2 * x[0] * std::conj(y[0]);
    cplx ab = 0, tx = 0, ty = 0;
    int k = 0;
    for (int m = 0; m < 4; ++m)
        for (int n = m; n < 4; ++n, ++k) {
            const double w = (m == n ? 1.0 : 2.0) * eta(m, m) * eta(n, n);
            ab += w * x[k] * std::conj(y[k]);
            if (m == n) {
                tx += eta(m, m) * x[k];
                ty += eta(m, m) * y[k];
            }
        }
    return k2 * (ab - 0.5 * tx * std::conj(ty));
}

inline double kernel_norm(const KernelSpec& spec) {
    if (spec.field == FieldType::EM) return 1.0;
    return spec.projection == StressProjection::Newtonian ? 0.5 * spec.kappa_squared() : 3.0 * spec.kappa_squared();
}

/** Time nodes of one source with the branch sign folded into the weight. */
struct TimeNode {
    double t, w;
    Vec3 y, v;
};

/** Stretch of a branch at rest: contributes exactly int e^{-i w t} dt. */
struct RestRun {
    double ta, tb, sign;
    Vec3 y;
};

/**
 * @brief Fourier transform of one difference source on a sphere |k| = k.
 *
 * f(k_hat) = c sum_P eps_P int dt e^{-i k t} e^{i k k_hat . (X_P - center)} U_P(t).
 */
class SourceSpectrum {
public:
    SourceSpectrum(const BranchedSource& src, const KernelSpec& spec, const QuadratureOptions& opt)
        : src_(&src), spec_(&spec), opt_(&opt), ncomp_(component_count(spec)) {
        for (int p = 0; p < 2; ++p) {
            const auto& w = src.branch(p);
            const double sign = p == 0 ? 1.0 : -1.0;
            for (std::size_t i = 0; i + 1 < w.size(); ++i) {
                const bool rest = norm(w.velocities()[i]) == 0 && norm(w.velocities()[i + 1]) == 0 &&
                                  norm(w.positions()[i] - w.positions()[i + 1]) == 0;
                if (rest) {
                    const Vec3 y = w.positions()[i] - src.center();
                    if (!runs_.empty() && runs_.back().sign == sign && runs_.back().tb == w.times()[i] &&
                        norm(runs_.back().y - y) == 0)
                        runs_.back().tb = w.times()[i + 1];
                    else
                        runs_.push_back({w.times()[i], w.times()[i + 1], sign, y});
                } else {
                    moving_.push_back({p, i});
                }
            }
        }
        mirrored_ = src.right().size() == src.left().size();
        for (std::size_t i = 0; mirrored_ && i < src.right().size(); ++i) {
            const Vec3 a = src.right().positions()[i] - src.center();
            const Vec3 b = src.left().positions()[i] - src.center();
            if (norm(a + b) > 1e-14 * std::max(1.0, src.radius()) ||
                norm(src.right().velocities()[i] + src.left().velocities()[i]) > 1e-14)
                mirrored_ = false;
        }
        axial_ = src.axis().has_value() && !opt.direct_angular;
    }

    const BranchedSource& source() const { return *src_; }
    int components() const { return ncomp_; }
    bool axial() const { return axial_; }

    /** Prepares nodes and (for axial sources) the q-table at wavenumber k. */
    void prepare(double k) {
        k_ = k;
        nodes_.clear();
        const auto& src = *src_;
        for (auto [p, i] : moving_) {
            const auto& w = src.branch(p);
            const double h = w.times()[i + 1] - w.times()[i];
            const double vmax = std::max(norm(w.velocities()[i]), norm(w.velocities()[i + 1]));
            const double theta = k * (1 + vmax) * h;
            const int n = std::clamp(static_cast<int>(std::ceil(opt_->time_refine * (theta + 6))), 4, 256);
            const GaussRule& g = gauss_legendre(n);
            const double sign = p == 0 ? 1.0 : -1.0;
            for (int j = 0; j < n; ++j) {
                const double t = w.times()[i] + 0.5 * h * (1 + g.x[j]);
                const Kinematics kin = w.on_segment(i, t);
                nodes_.push_back({t, sign * 0.5 * h * g.w[j], kin.x - src.center(), kin.v});
            }
        }
        phase_.resize(nodes_.size());
        for (std::size_t n = 0; n < nodes_.size(); ++n)
            phase_[n] = nodes_[n].w * std::polar(1.0, -k * nodes_[n].t);
        run_amp_.resize(runs_.size());
        for (std::size_t r = 0; r < runs_.size(); ++r) {
            const auto& run = runs_[r];
            run_amp_[r] = k == 0 ? cplx(run.sign * (run.tb - run.ta))
                                 : run.sign * (std::polar(1.0, -k * run.ta) - std::polar(1.0, -k * run.tb)) /
                                       cplx(0, k);
        }
        if (axial_) build_table();
    }

    /** Packed components of f at direction khat (unit vector). */
    void eval(const Vec3& khat, cplx* out) const {
        const double c = src_->coupling();
        if (axial_) {
            const Vec3& n = *src_->axis();
            const double q = k_ * dot(khat, n);
            cplx g[3];
            cheb_.interpolate(q, table_.data(), ntab_, g);
            expand_axial(n, g, out);
            for (int i = 0; i < ncomp_; ++i) out[i] *= c;
            return;
        }
        for (int i = 0; i < ncomp_; ++i) out[i] = 0;
        double u[10];
        for (std::size_t m = 0; m < nodes_.size(); ++m) {
            const cplx a = phase_[m] * std::polar(1.0, k_ * dot(khat, nodes_[m].y));
            pack_components(*spec_, nodes_[m].v, u);
            for (int i = 0; i < ncomp_; ++i) out[i] += a * u[i];
        }
        pack_components(*spec_, Vec3{}, u);
        for (std::size_t r = 0; r < runs_.size(); ++r) {
            const cplx a = run_amp_[r] * std::polar(1.0, k_ * dot(khat, runs_[r].y));
            for (int i = 0; i < ncomp_; ++i) out[i] += a * u[i];
        }
        for (int i = 0; i < ncomp_; ++i) out[i] *= c;
    }

    /** Bound on the Euclidean norm of f for any k. */
    double magnitude_bound() const {
        double m = 0;
        for (int p = 0; p < 2; ++p) {
            const auto& w = src_->branch(p);
            for (std::size_t i = 0; i + 1 < w.size(); ++i) {
                const double v = std::max(norm(w.velocities()[i]), norm(w.velocities()[i + 1])) * 1.25;
                m += (w.times()[i + 1] - w.times()[i]) * (1 + v * v);
            }
        }
        return std::abs(src_->coupling()) * m;
    }

private:
    void build_table() {
        const Vec3& n = *src_->axis();
        const double kr = k_ * src_->radius();
        const int deg = static_cast<int>(std::ceil(kr + 10 * std::cbrt(kr) + 12));
        if (cheb_.degree() != deg || cheb_half_ != k_) {
            cheb_ = ChebyshevNodes(deg, k_);
            cheb_half_ = k_;
        }
        ntab_ = spec_->field == FieldType::EM ? 2 : (spec_->projection == StressProjection::Newtonian ? 1 : 3);
        table_.assign(static_cast<std::size_t>(deg + 1) * ntab_, cplx{});
        std::vector<double> s(nodes_.size()), sd(nodes_.size());
        for (std::size_t m = 0; m < nodes_.size(); ++m) {
            s[m] = dot(nodes_[m].y, n);
            sd[m] = dot(nodes_[m].v, n);
        }
        const auto& q = cheb_.nodes();
        for (int j = 0; j <= deg; ++j) {
            cplx g0 = 0, g1 = 0, g2 = 0;
            for (std::size_t m = 0; m < nodes_.size(); ++m) {
                const cplx a = phase_[m] * std::polar(1.0, q[j] * s[m]);
                g0 += a;
                if (ntab_ > 1) {
                    g1 += a * sd[m];
                    if (ntab_ > 2) g2 += a * (sd[m] * sd[m]);
                }
            }
            for (std::size_t r = 0; r < runs_.size(); ++r) g0 += run_amp_[r] * std::polar(1.0, q[j] * dot(runs_[r].y, n));
            table_[j * ntab_] = g0;
            if (ntab_ > 1) table_[j * ntab_ + 1] = g1;
            if (ntab_ > 2) table_[j * ntab_ + 2] = g2;
        }
    }

    void expand_axial(const Vec3& n, const cplx* g, cplx* out) const {
        if (spec_->field == FieldType::EM) {
            out[0] = g[0];
            out[1] = n.x * g[1];
            out[2] = n.y * g[1];
            out[3] = n.z * g[1];
            return;
        }
        if (spec_->projection == StressProjection::Newtonian) {
            out[0] = g[0];
            return;
        }
        const double e[4] = {1.0, n.x, n.y, n.z};
        int k = 0;
        for (int a = 0; a < 4; ++a)
            for (int b = a; b < 4; ++b) {
                const int order = (a > 0) + (b > 0);
                out[k++] = e[a] * e[b] * g[order];
            }
    }

    const BranchedSource* src_;
    const KernelSpec* spec_;
    const QuadratureOptions* opt_;
    int ncomp_;
    bool mirrored_ = false;
    bool axial_ = false;
    std::vector<std::pair<int, std::size_t>> moving_;
    std::vector<RestRun> runs_;
    double k_ = 0;
    std::vector<TimeNode> nodes_;
    std::vector<cplx> phase_, run_amp_;
    ChebyshevNodes cheb_;
    double cheb_half_ = -1;
    int ntab_ = 1;
    std::vector<cplx> table_;
};

inline bool parallel_axis(const Vec3& a, const Vec3& b) { return norm(cross(a, b)) <= 1e-12 * norm(a) * norm(b); }

/** Orthonormal frame (e1, e2, ez) with ez along the given direction. */
inline std::array<Vec3, 3> frame_along(const Vec3& z) {
    const Vec3 ez = z * (1.0 / norm(z));
    const Vec3 t = std::abs(ez.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    Vec3 e1 = cross(t, ez);
    e1 = e1 * (1.0 / norm(e1));
    return {e1, cross(ez, e1), ez};
}

/**
 * Angular integral of e^{i k.D} f_X(khat) K conj(f_Y(khat)) over the unit
 * sphere, using the plane-wave expansion of e^{i k.D} truncated at the band
 * limit of the integrand.
 */
inline cplx angular_overlap(const KernelSpec& spec, const SourceSpectrum& X, const SourceSpectrum& Y, double k,
                            const Vec3& D) {
    const auto& sx = X.source();
    const auto& sy = Y.source();
    const double kr = k * (sx.radius() + sy.radius());
    const int L = static_cast<int>(std::ceil(kr + 10 * std::cbrt(kr) + 12));
    const double dn = norm(D);
    Vec3 zdir = dn > 0 ? D : (sx.axis() ? *sx.axis() : (sy.axis() ? *sy.axis() : Vec3{0, 0, 1}));
    const auto fr = frame_along(zdir);
    auto symmetric = [&](const BranchedSource& s, const SourceSpectrum& sp) {
        return s.trivial() || (sp.axial() && parallel_axis(*s.axis(), fr[2]));
    };
    const bool axisym = symmetric(sx, X) && symmetric(sy, Y);
    const int nmu = L + 1;
    const int nphi = axisym ? 1 : L + 1;
    const GaussRule& g = gauss_legendre(nmu);
    std::vector<double> jl;
    if (dn > 0) spherical_bessel_j(L, k * dn, jl);
    const int nc = X.components();
    std::vector<cplx> fx(nc), fy(nc);
    const bool same = &X == &Y;
    std::vector<cplx> terms(nmu);
    for (int i = 0; i < nmu; ++i) {
        const double mu = g.x[i];
        cplx E = 1.0;
        if (dn > 0) {
            E = 0;
            double pm1 = 0, pl = 1;
            cplx il = 1;
            for (int l = 0; l <= L; ++l) {
                E += il * (2.0 * l + 1) * jl[l] * pl;
                const double next = ((2 * l + 1) * mu * pl - l * pm1) / (l + 1);
                pm1 = pl;
                pl = next;
                il *= cplx(0, 1);
            }
        }
        const double st = std::sqrt(std::max(0.0, 1 - mu * mu));
        cplx acc = 0;
        for (int j = 0; j < nphi; ++j) {
            const double ph = 2 * std::numbers::pi * j / nphi;
            const Vec3 kh = mu * fr[2] + (st * std::cos(ph)) * fr[0] + (st * std::sin(ph)) * fr[1];
            X.eval(kh, fx.data());
            if (same)
                fy = fx;
            else
                Y.eval(kh, fy.data());
            acc += contract_packed(spec, fx.data(), fy.data());
        }
        terms[i] = g.w[i] * E * acc * (2 * std::numbers::pi / nphi);
    }
    return pairwise_sum(terms);
}

}  // namespace detail

/**
 * Momentum-space Wightman overlaps W_XY = int d^3k/((2pi)^3 2k) e^{-k^2 a}
 * F_X K conj(F_Y) for (AA, BB, AB), with Gamma_A = W_AA/2, Gamma_B = W_BB/2,
 * Gamma_c = Re W_AB and Phi_AB - Phi_BA = 2 Im W_AB.
 */
struct WightmanOverlaps {
    double w_aa = 0, w_bb = 0;
    cplx w_ab = 0;
    double err_aa = 0, err_bb = 0, err_ab = 0;
    double k_cut = 0;
    int panels = 0;
    bool converged = true;
};

inline void check_resolution(const BranchedSource& s, const KernelSpec& spec) {
    if (spec.uv_cutoff * s.sigma() < 10.0) throw Error("kernel cannot resolve source");
}

/** Which overlaps to compute. */
enum OverlapMask : unsigned { kOverlapAA = 1, kOverlapBB = 2, kOverlapAB = 4, kOverlapAll = 7 };

inline WightmanOverlaps wightman_overlaps(const BranchedSource& a, const BranchedSource& b, const KernelSpec& spec,
                                          const QuadratureOptions& opt = {}, unsigned mask = kOverlapAll) {
    spec.validate();
    if (a.field() != spec.field || b.field() != spec.field) throw Error("source and kernel field types differ");
    check_resolution(a, spec);
    check_resolution(b, spec);
    WightmanOverlaps out;
    const bool ta = a.trivial(), tb = b.trivial();
    if (ta && tb) return out;

    const double a_aa = a.sigma() * a.sigma(), a_bb = b.sigma() * b.sigma();
    const double a_ab = 0.5 * (a_aa + a_bb);
    const Vec3 D = a.center() - b.center();

    auto make_integrand = [&](std::vector<detail::SourceSpectrum>& proto, unsigned sel) {
        return [&, sel](double k, cplx* w) {
            std::vector<detail::SourceSpectrum> sp = proto;
            if (!ta) sp[0].prepare(k);
            if (!tb) sp[1].prepare(k);
            const double pre = k / (2 * detail::two_pi_cubed);
            w[0] = w[1] = w[2] = 0.0;
            if ((sel & kOverlapAA) && !ta)
                w[0] = pre * std::exp(-k * k * a_aa) * detail::angular_overlap(spec, sp[0], sp[0], k, {});
            if ((sel & kOverlapBB) && !tb)
                w[1] = pre * std::exp(-k * k * a_bb) * detail::angular_overlap(spec, sp[1], sp[1], k, {});
            if ((sel & kOverlapAB) && !ta && !tb)
                w[2] = pre * std::exp(-k * k * a_ab) * detail::angular_overlap(spec, sp[0], sp[1], k, D);
        };
    };
    std::vector<detail::SourceSpectrum> proto{detail::SourceSpectrum(a, spec, opt), detail::SourceSpectrum(b, spec, opt)};

    const double span_a = a.t_end() - a.t_begin(), span_b = b.t_end() - b.t_begin();
    const double span = std::max({a.t_end(), b.t_end()}) - std::min({a.t_begin(), b.t_begin()}) + norm(D) +
                        a.radius() + b.radius();
    auto breaks_to = [&](double k0, double k1, double width) {
        std::vector<double> br{k0};
        const int n = std::max(1, static_cast<int>(std::ceil((k1 - k0) / width)));
        for (int i = 1; i <= n; ++i) br.push_back(k0 + (k1 - k0) * i / n);
        return br;
    };

    // Pilot pass fixes the scale used for the tail cut and the absolute floors.
    const double k_scale = std::min(spec.uv_cutoff, 3.0 / std::sqrt(std::max(a_aa, a_bb)));
    AdaptiveOptions pilot_opt;
    pilot_opt.rel_tol = 1e-2;
    pilot_opt.workers = opt.workers;
    pilot_opt.max_panels = 200;
    const double width0 = 4 * std::numbers::pi / std::max(span_a, span_b);
    auto pilot = integrate_adaptive(make_integrand(proto, kOverlapAA | kOverlapBB), breaks_to(0, k_scale, std::max(width0, k_scale / 64)),
                                    3, pilot_opt);
    const double s_aa = std::abs(pilot.value[0]), s_bb = std::abs(pilot.value[1]);
    double scale_ab = std::sqrt(s_aa * s_bb);
    if (scale_ab == 0) scale_ab = std::max(s_aa, s_bb);

    const double m_a = proto[0].magnitude_bound(), m_b = proto[1].magnitude_bound();
    const double c0 = 4 * std::numbers::pi * detail::kernel_norm(spec) / (2 * detail::two_pi_cubed);
    auto tail = [&](double kc, double mx, double my, double aa) { return c0 * mx * my * std::exp(-aa * kc * kc) / (2 * aa); };
    auto cut_for = [&](double mx, double my, double aa, double target) {
        if (target <= 0) return spec.uv_cutoff;
        const double arg = std::log(std::max(1.0, c0 * mx * my / (2 * aa * target)));
        return std::min(spec.uv_cutoff, std::sqrt(arg / aa));
    };
    const double floor_rel = 1e-3 * opt.rel_tol;
    double kc = 0;
    if (!ta && (mask & kOverlapAA)) kc = std::max(kc, cut_for(m_a, m_a, a_aa, floor_rel * s_aa));
    if (!tb && (mask & kOverlapBB)) kc = std::max(kc, cut_for(m_b, m_b, a_bb, floor_rel * s_bb));
    if (!ta && !tb && (mask & kOverlapAB)) kc = std::max(kc, cut_for(m_a, m_b, a_ab, floor_rel * scale_ab));
    kc = std::max(kc, std::min(spec.uv_cutoff, k_scale));

    AdaptiveOptions ao;
    ao.rel_tol = opt.rel_tol;
    ao.workers = opt.workers;
    ao.max_panels = opt.max_panels;
    ao.abs_tol = {floor_rel * s_aa, floor_rel * s_bb, floor_rel * scale_ab};
    std::vector<double> br = breaks_to(0, std::min(kc, 64.0 * 2 * std::numbers::pi / std::max(span, 1e-12)), width0);
    for (double x = br.back() * 2; x < kc; x *= 2) br.push_back(x);
    if (br.back() < kc) br.push_back(kc);
    auto res = integrate_adaptive(make_integrand(proto, mask), br, 3, ao);

    out.w_aa = res.value[0].real();
    out.w_bb = res.value[1].real();
    out.w_ab = res.value[2];
    out.err_aa = res.error[0] + (ta ? 0 : tail(kc, m_a, m_a, a_aa));
    out.err_bb = res.error[1] + (tb ? 0 : tail(kc, m_b, m_b, a_bb));
    out.err_ab = res.error[2] + ((ta || tb) ? 0 : tail(kc, m_a, m_b, a_ab));
    out.k_cut = kc;
    out.panels = res.panels;
    out.converged = res.converged;
    return out;
}

/** Gamma_i = (1/4) int int dS.K.dS <{phi, phi}>, computed in momentum space. */
inline double gamma_self(const BranchedSource& src, const KernelSpec& spec, const QuadratureOptions& opt = {}) {
    const auto w = wightman_overlaps(src, src, spec, opt, kOverlapAA);
    return 0.5 * w.w_aa;
}

/** Gamma_c = (1/2) int int dS_A.K.dS_B <{phi, phi}>. */
inline double gamma_cross(const BranchedSource& a, const BranchedSource& b, const KernelSpec& spec,
                          const QuadratureOptions& opt = {}) {
    if (a.field() != b.field()) throw Error("sources have different field types");
    return wightman_overlaps(a, b, spec, opt, kOverlapAB).w_ab.real();
}

namespace detail {

/** Finds t with t - ty - |X(t) - y| = 0; the left side is increasing in t. */
inline double retarded_time(const Worldline& w, double ty, const Vec3& y) {
    double lo = ty, hi = ty + norm(w.at(ty).x - y) / (1 - std::min(w.max_speed() * 1.25, 0.999)) + 1e-300;
    double t = ty + norm(w.at(ty).x - y);
    for (int it = 0; it < 100; ++it) {
        const Kinematics k = w.at(t);
        const Vec3 r = k.x - y;
        const double d = norm(r);
        const double gv = t - ty - d;
        if (gv > 0)
            hi = std::min(hi, t);
        else
            lo = std::max(lo, t);
        const double gp = d > 0 ? 1 - dot(r, k.v) / d : 1.0;
        double tn = t - gv / gp;
        if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
        if (std::abs(tn - t) <= 1e-15 * std::max(1.0, std::abs(t))) return tn;
        t = tn;
    }
    return t;
}

inline double contract_velocities(const KernelSpec& spec, const Vec3& vx, const Vec3& vy) {
    if (spec.field == FieldType::EM) return -1.0 + dot(vx, vy);
    const double k2 = spec.kappa_squared();
    if (spec.projection == StressProjection::Newtonian) return 0.5 * k2;
    const double uu = -1.0 + dot(vx, vy);
    const double ux = -1.0 + dot(vx, vx), uy = -1.0 + dot(vy, vy);
    return k2 * (uu * uu - 0.5 * ux * uy);
}

}  // namespace detail

/** @brief Directed causal phase with its error estimate. */
struct PhiResult {
    double value = 0;
    double error = 0;
    int panels = 0;
    bool converged = true;
};

/**
 * Phi_XY = int int dS_X(x).G^r(x, y).dS_Y(y): field point on X, source on Y.
 * For every emission time of Y the light-cone delta is integrated along the
 * retarded intersection with each branch of X.
 */
inline PhiResult phi_directed_report(const BranchedSource& x, const BranchedSource& y, const KernelSpec& spec,
                                     const QuadratureOptions& opt = {}) {
    spec.validate();
    if (x.field() != spec.field || y.field() != spec.field) throw Error("source and kernel field types differ");
    if (x.label() == y.label()) throw Error("phi_directed needs sources with distinct labels");
    check_resolution(x, spec);
    check_resolution(y, spec);
    PhiResult out;
    if (x.trivial() || y.trivial()) return out;

    const double s = std::hypot(x.sigma(), y.sigma());
    const double sk = spec.smearing_width;
    const double vx = std::min(0.999, x.max_speed() * 1.25);
    const double half = opt.cone_width * std::hypot(s, sk) / (1 - vx);
    const int nin = std::max(8, static_cast<int>(std::ceil(opt.cone_nodes * opt.time_refine)));
    const GaussRule& g = gauss_legendre(nin);
    const double xa = x.t_begin(), xb = x.t_end();

    auto integrand = [&](double ty, cplx* out_v) {
        double total = 0;
        for (int q = 0; q < 2; ++q) {
            const Kinematics ky = y.branch(q).at(ty);
            for (int p = 0; p < 2; ++p) {
                const Worldline& wx = x.branch(p);
                const double ts = detail::retarded_time(wx, ty, ky.x);
                const double lo = std::max({ts - half, ty, xa}), hi = std::min(ts + half, xb);
                if (!(hi > lo)) continue;
                double acc = 0;
                for (int j = 0; j < nin; ++j) {
                    const double t = 0.5 * (lo + hi) + 0.5 * (hi - lo) * g.x[j];
                    const Kinematics kx = wx.at(t);
                    const double d = norm(kx.x - ky.x);
                    acc += g.w[j] * detail::contract_velocities(spec, kx.v, ky.v) * cone_kernel(t - ty, d, s, sk);
                }
                total += (p == q ? 1.0 : -1.0) * 0.5 * (hi - lo) * acc;
            }
        }
        out_v[0] = -x.coupling() * y.coupling() * total;
    };

    AdaptiveOptions ao;
    ao.rel_tol = opt.rel_tol * 1e-2;
    ao.abs_tol = {1e-300};
    ao.workers = opt.workers;
    ao.max_panels = std::max(opt.max_panels, 4 * static_cast<int>(y.right().size()));
    auto res = integrate_adaptive(integrand, y.right().times(), 1, ao);
    out.value = res.value[0].real();
    out.error = res.error[0];
    out.panels = res.panels;
    out.converged = res.converged;
    return out;
}

inline double phi_directed(const BranchedSource& x, const BranchedSource& y, const KernelSpec& spec,
                           const QuadratureOptions& opt = {}) {
    return phi_directed_report(x, y, spec, opt).value;
}

/** All five functionals with diagnostics; validates the type invariants. */
inline FunctionalsReport compute_all_report(const BranchedSource& a, const BranchedSource& b, const KernelSpec& spec,
                                            const QuadratureOptions& opt = {}) {
    if (a.label() != Label::A || b.label() != Label::B) throw Error("compute_all expects sources labelled A and B");
    if (a.field() != b.field()) throw Error("sources have different field types");
    FunctionalsReport r;
    const auto w = wightman_overlaps(a, b, spec, opt);
    const auto pab = phi_directed_report(a, b, spec, opt);
    const auto pba = phi_directed_report(b, a, spec, opt);
    r.values = InfluenceFunctionals::make(0.5 * w.w_aa, 0.5 * w.w_bb, w.w_ab.real(), pab.value, pba.value);
    r.err_gamma_a = 0.5 * w.err_aa;
    r.err_gamma_b = 0.5 * w.err_bb;
    r.err_gamma_c = w.err_ab;
    r.err_phi_ab = pab.error;
    r.err_phi_ba = pba.error;
    r.commutator = 2 * w.w_ab.imag();
    r.err_commutator = 2 * w.err_ab;
    r.k_cut = w.k_cut;
    r.k_panels = w.panels;
    r.converged = w.converged && pab.converged && pba.converged;
    const double tol = r.err_gamma_c + 2 * std::sqrt(std::max(0.0, r.values.gamma_a) * r.err_gamma_b) +
                       2 * std::sqrt(std::max(0.0, r.values.gamma_b) * r.err_gamma_a) + r.err_gamma_a + r.err_gamma_b;
    r.values.validate(tol);
    return r;
}

inline InfluenceFunctionals compute_all(const BranchedSource& a, const BranchedSource& b, const KernelSpec& spec,
                                        const QuadratureOptions& opt = {}) {
    return compute_all_report(a, b, spec, opt).values;
}

}  // namespace infl
