#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "core.hpp"
#include "parallel.hpp"

namespace infl {

using cplx = std::complex<double>;

/** @brief Gauss-Legendre nodes and weights on [-1, 1]. */
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};

inline GaussRule compute_gauss_legendre(int n) {
    GaussRule r;
    r.x.resize(n);
    r.w.resize(n);
    if (n == 1) {
        r.x[0] = 0.0;
        r.w[0] = 2.0;
        return r;
    }
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        double p0 = 1, p1 = z;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (z * p1 - p0) / (z * z - 1);
        const double w = 2 / ((1 - z * z) * dp * dp);
        r.x[i] = -z;
        r.x[n - 1 - i] = z;
        r.w[i] = r.w[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.x[n / 2] = 0.0;
    return r;
}

/** Cached Gauss-Legendre rule of order n (thread-safe). */
inline const GaussRule& gauss_legendre(int n) {
    static std::mutex m;
    static std::map<int, std::unique_ptr<GaussRule>> cache;
    std::lock_guard<std::mutex> g(m);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<GaussRule>(compute_gauss_legendre(n));
    return *slot;
}

/** Composite Gauss-Legendre integral of a scalar function over [a, b]. */
template <class F>
double integrate_gl(F&& f, double a, double b, int panels, int order) {
    const GaussRule& g = gauss_legendre(order);
    std::vector<double> part(panels);
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h, c = lo + 0.5 * h;
        double s = 0;
        for (int i = 0; i < order; ++i) s += g.w[i] * f(c + 0.5 * h * g.x[i]);
        part[p] = 0.5 * h * s;
    }
    return pairwise_sum(part);
}

namespace detail {

inline constexpr double xgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                  0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                  0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                  0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double wgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                  0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                  0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                  0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double wg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                 0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

}  // namespace detail

/** @brief Options of the adaptive Gauss-Kronrod integrator. */
struct AdaptiveOptions {
    double rel_tol = 1e-6;
    /** Absolute floor per component; empty means 0 for every component. */
    std::vector<double> abs_tol;
    int max_panels = 20000;
    /** Panels bisected per refinement round; fixed so results do not depend on workers. */
    int batch = 8;
    int workers = 1;
};

/** @brief Vector-valued integral with per-component error estimates. */
struct AdaptiveResult {
    std::vector<cplx> value;
    std::vector<double> error;
    int panels = 0;
    int evaluations = 0;
    bool converged = false;
};

/**
 * @brief Global adaptive G7/K15 quadrature of a complex vector-valued integrand.
 *
 * f(x, out) writes `dim` components into out. Integration starts from the
 * panels given by `breaks` (ascending) and bisects the worst panels until
 * every component meets max(abs_tol[c], rel_tol * |I_c|).
 */
template <class F>
AdaptiveResult integrate_adaptive(F&& f, const std::vector<double>& breaks, std::size_t dim,
                                  const AdaptiveOptions& opt) {
    struct Panel {
        double a, b;
        std::vector<cplx> val;
        std::vector<double> err;
    };
    auto eval_panels = [&](std::vector<Panel>& ps) {
        const std::size_t np = ps.size();
        std::vector<cplx> fx(np * 15 * dim);
        parallel_for(np * 15, opt.workers, [&](std::size_t idx) {
            const std::size_t p = idx / 15, j = idx % 15;
            const double c = 0.5 * (ps[p].a + ps[p].b), h = 0.5 * (ps[p].b - ps[p].a);
            const double x = j < 7 ? c - h * detail::xgk[j] : (j == 7 ? c : c + h * detail::xgk[14 - j]);
            f(x, &fx[idx * dim]);
        });
        for (std::size_t p = 0; p < np; ++p) {
            const double h = 0.5 * (ps[p].b - ps[p].a);
            ps[p].val.assign(dim, cplx{});
            ps[p].err.assign(dim, 0.0);
            for (std::size_t c = 0; c < dim; ++c) {
                cplx k{}, g{};
                for (int j = 0; j < 15; ++j) {
                    const int m = j < 7 ? j : (j == 7 ? 7 : 14 - j);
                    const cplx v = fx[(p * 15 + j) * dim + c];
                    k += detail::wgk[m] * v;
                    if (m % 2 == 1 && m < 7) g += detail::wg[m / 2] * v;
                }
                g += detail::wg[3] * fx[(p * 15 + 7) * dim + c];
                ps[p].val[c] = h * k;
                ps[p].err[c] = std::abs(h * (k - g));
            }
        }
    };

    std::vector<Panel> panels;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
        if (breaks[i + 1] > breaks[i]) panels.push_back({breaks[i], breaks[i + 1], {}, {}});
    AdaptiveResult res;
    res.value.assign(dim, cplx{});
    res.error.assign(dim, 0.0);
    if (panels.empty()) {
        res.converged = true;
        return res;
    }
    eval_panels(panels);
    res.evaluations = static_cast<int>(panels.size()) * 15;

    auto totals = [&] {
        for (std::size_t c = 0; c < dim; ++c) {
            std::vector<cplx> v(panels.size());
            std::vector<double> e(panels.size());
            for (std::size_t p = 0; p < panels.size(); ++p) {
                v[p] = panels[p].val[c];
                e[p] = panels[p].err[c];
            }
            res.value[c] = pairwise_sum(v);
            res.error[c] = pairwise_sum(e);
        }
    };
    auto tol = [&](std::size_t c) {
        const double floor = c < opt.abs_tol.size() ? opt.abs_tol[c] : 0.0;
        return std::max(floor, opt.rel_tol * std::abs(res.value[c]));
    };

    while (true) {
        totals();
        bool ok = true;
        for (std::size_t c = 0; c < dim; ++c)
            if (res.error[c] > tol(c)) ok = false;
        if (ok) {
            res.converged = true;
            break;
        }
        if (static_cast<int>(panels.size()) >= opt.max_panels) break;
        std::vector<std::pair<double, std::size_t>> score(panels.size());
        for (std::size_t p = 0; p < panels.size(); ++p) {
            double s = 0;
            for (std::size_t c = 0; c < dim; ++c) {
                const double t = tol(c);
                if (res.error[c] > t) s += panels[p].err[c] / std::max(t, 1e-300);
            }
            score[p] = {s, p};
        }
        const std::size_t nb = std::min<std::size_t>(opt.batch, panels.size());
        std::partial_sort(score.begin(), score.begin() + nb, score.end(), [](const auto& a, const auto& b) {
            return a.first > b.first || (a.first == b.first && a.second < b.second);
        });
        std::vector<std::size_t> pick;
        for (std::size_t i = 0; i < nb; ++i)
            if (score[i].first > 0) pick.push_back(score[i].second);
        std::sort(pick.begin(), pick.end());
        std::vector<Panel> fresh;
        for (std::size_t p : pick) {
            const double m = 0.5 * (panels[p].a + panels[p].b);
            fresh.push_back({panels[p].a, m, {}, {}});
            fresh.push_back({m, panels[p].b, {}, {}});
        }
        eval_panels(fresh);
        res.evaluations += static_cast<int>(fresh.size()) * 15;
        std::vector<Panel> next;
        next.reserve(panels.size() + pick.size());
        std::size_t q = 0;
        for (std::size_t p = 0; p < panels.size(); ++p) {
            if (q < pick.size() && pick[q] == p) {
                next.push_back(std::move(fresh[2 * q]));
                next.push_back(std::move(fresh[2 * q + 1]));
                ++q;
            } else {
                next.push_back(std::move(panels[p]));
            }
        }
        panels = std::move(next);
    }
    res.panels = static_cast<int>(panels.size());
    return res;
}

/**
 * Spherical Bessel functions j_0..j_lmax at x >= 0: upward recurrence when
 * x exceeds lmax, normalized backward (Miller) recurrence otherwise.
 */
inline void spherical_bessel_j(int lmax, double x, std::vector<double>& out) {
    out.assign(lmax + 1, 0.0);
    if (x == 0) {
        out[0] = 1.0;
        return;
    }
    const double j0 = std::sin(x) / x;
    if (x > lmax) {
        out[0] = j0;
        if (lmax >= 1) out[1] = std::sin(x) / (x * x) - std::cos(x) / x;
        for (int l = 1; l < lmax; ++l) out[l + 1] = (2 * l + 1) / x * out[l] - out[l - 1];
        return;
    }
    const double j1 = std::sin(x) / (x * x) - std::cos(x) / x;
    const int start = std::max(lmax, static_cast<int>(x)) + 20 + static_cast<int>(std::sqrt(40.0 * (lmax + x + 1)));
    double jnext = 0.0, j = 1e-300;
    std::vector<double> tmp(lmax + 2, 0.0);
    for (int l = start; l >= 1; --l) {
        const double jprev = (2 * l + 1) / x * j - jnext;
        jnext = j;
        j = jprev;
        if (l - 1 <= lmax + 1) tmp[l - 1] = j;
        if (std::abs(j) > 1e250) {
            j *= 1e-250;
            jnext *= 1e-250;
            for (auto& v : tmp) v *= 1e-250;
        }
    }
    const double scale = std::abs(j0) >= std::abs(j1) ? j0 / tmp[0] : j1 / tmp[1];
    for (int l = 0; l <= lmax; ++l) out[l] = tmp[l] * scale;
}

/**
 * @brief Barycentric interpolation on Chebyshev points of the second kind.
 *
 * Nodes are x_j = hw * cos(pi j / n), j = 0..n, on [-hw, hw].
 */
class ChebyshevNodes {
public:
    ChebyshevNodes() = default;
    ChebyshevNodes(int n, double half_width) : n_(n), hw_(half_width), x_(n + 1), w_(n + 1) {
        for (int j = 0; j <= n; ++j) {
            x_[j] = half_width * std::cos(std::numbers::pi * j / n);
            w_[j] = (j % 2 ? -1.0 : 1.0) * ((j == 0 || j == n) ? 0.5 : 1.0);
        }
    }
    int degree() const { return n_; }
    const std::vector<double>& nodes() const { return x_; }

    /** Interpolates `ncomp` interleaved tables (value[j * ncomp + c]) at x. */
    void interpolate(double x, const cplx* values, int ncomp, cplx* out) const {
        for (int c = 0; c < ncomp; ++c) out[c] = 0;
        double den = 0;
        for (int j = 0; j <= n_; ++j) {
            const double d = x - x_[j];
            if (d == 0) {
                for (int c = 0; c < ncomp; ++c) out[c] = values[j * ncomp + c];
                return;
            }
            const double q = w_[j] / d;
            den += q;
            for (int c = 0; c < ncomp; ++c) out[c] += q * values[j * ncomp + c];
        }
        for (int c = 0; c < ncomp; ++c) out[c] /= den;
    }

private:
    int n_ = 0;
    double hw_ = 0;
    std::vector<double> x_, w_;
};

}  // namespace infl
