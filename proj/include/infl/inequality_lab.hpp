#pragma once

#include <algorithm>
#include <array>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "core.hpp"
#include "functionals.hpp"
#include "parallel.hpp"
#include "quantum_state.hpp"
#include "rng.hpp"

namespace infl {

/** 50-digit binary float used to re-check apparent violations. */
using extended = boost::multiprecision::cpp_bin_float_50;

/** @brief Coefficient relating lambda_min to the entanglement indicator. */
struct CoefficientC {
    double value;
    /** Set for the all-zero tuple, where the formula is 0/0; value is then +inf. */
    bool degenerate;
};

inline void require_causal(const InfluenceFunctionals& f) {
    if (f.phi_ab != 0) throw Error("causal-form routine requires phi_ab = 0");
    if (f.gamma_a + f.gamma_b < std::abs(f.gamma_c)) throw Error("invariant violation: gamma_a + gamma_b < |gamma_c|");
}

/** C = e^{-S} [1 - e^{-S} cosh gc + sqrt(rad)]^{-1}, rad with sin^2(phi_ba/4). */
inline CoefficientC coefficient_C(const InfluenceFunctionals& f) {
    require_causal(f);
    const double S = f.gamma_a + f.gamma_b;
    const double den = detail::one_minus_damped_cosh(S, f.gamma_c) +
                       std::sqrt(std::max(0.0, detail::radicand(f, detail::mean_phase_sin2(f))));
    if (den == 0) return {std::numeric_limits<double>::infinity(), true};
    return {std::exp(-S) / den, false};
}

/** C (sinh ga sinh gb - sinh^2(gc/2) - sin^2(phi_ba/4)). */
inline double lambda_min_factored(const InfluenceFunctionals& f) {
    const auto c = coefficient_C(f);
    const double bar = entanglement_indicator(f);
    if (c.degenerate) return 0.0;
    return c.value * bar;
}

namespace detail {

template <class T>
void require_open_cube(const T& x, const T& y, const T& z) {
    for (const T* v : {&x, &y, &z})
        if (!(*v > 0 && *v < 1)) throw Error("argument outside the open unit cube");
}

}  // namespace detail

/**
 * F(x, y, z) = (1/4)(1/x - x)(1/(yz) - yz) - sinh^2 sqrt(ln x ln y)
 *              - sin^2 sqrt(ln x ln z).
 */
template <class T>
T F(const T& x, const T& y, const T& z) {
    using std::log, std::sinh, std::sin, std::sqrt;
    detail::require_open_cube(x, y, z);
    const T lx = log(x), ly = log(y), lz = log(z);
    const T a = sinh(sqrt(lx * ly)), b = sin(sqrt(lx * lz));
    const T yz = y * z;
    return (1 / x - x) * (1 / yz - yz) / 4 - a * a - b * b;
}

/**
 * G(x, y, z) = 1 - x^2 - sin^2(2 asin z) / (C + sqrt(1 + C^2))^2 with
 * C = (1/y - y)^2 / (2(1/x - x)) + 2 z^2 / (1/x - x).
 */
template <class T>
T G(const T& x, const T& y, const T& z) {
    using std::asin, std::sin, std::sqrt;
    detail::require_open_cube(x, y, z);
    const T u = 1 / x - x, w = 1 / y - y;
    const T c = w * w / (2 * u) + 2 * z * z / u;
    const T s = sin(2 * asin(z));
    const T d = c + sqrt(1 + c * c);
    return 1 - x * x - s * s / (d * d);
}

enum class ScanFunction { F, G };

inline double evaluate(ScanFunction fn, double x, double y, double z) {
    return fn == ScanFunction::F ? F(x, y, z) : G(x, y, z);
}

inline extended evaluate_extended(ScanFunction fn, double x, double y, double z) {
    const extended X(x), Y(y), Z(z);
    return fn == ScanFunction::F ? F(X, Y, Z) : G(X, Y, Z);
}

/** @brief Result of a unit-cube non-negativity scan. */
struct ScanReport {
    ScanFunction fn = ScanFunction::F;
    int grid = 0;
    double margin = 0;
    std::size_t evaluations = 0;
    double min_value = std::numeric_limits<double>::infinity();
    std::array<double, 3> argmin{};
    /** Values below zero in double precision. */
    std::size_t raw_negatives = 0;
    /** Values still below zero after extended-precision re-evaluation. */
    std::size_t negatives = 0;
    std::vector<std::array<double, 4>> counterexamples;
};

inline double grid_coordinate(int i, int grid, double margin) {
    return grid == 1 ? 0.5 : margin + (1 - 2 * margin) * i / (grid - 1);
}

/** Evaluates fn on the uniform grid over [margin, 1 - margin]^3. */
inline ScanReport scan_nonnegativity(ScanFunction fn, int grid, double margin, int workers = default_workers()) {
    if (grid < 2) throw Error("grid_per_axis must be at least 2");
    if (!(margin > 0 && margin < 0.5)) throw Error("margin must lie in (0, 0.5)");
    ScanReport rep;
    rep.fn = fn;
    rep.grid = grid;
    rep.margin = margin;
    struct Slab {
        double min = std::numeric_limits<double>::infinity();
        std::array<double, 3> arg{};
        std::size_t raw = 0, neg = 0;
        std::vector<std::array<double, 4>> bad;
    };
    std::vector<Slab> slabs(grid);
    parallel_for(static_cast<std::size_t>(grid), workers, [&](std::size_t i) {
        Slab& s = slabs[i];
        const double x = grid_coordinate(static_cast<int>(i), grid, margin);
        for (int j = 0; j < grid; ++j) {
            const double y = grid_coordinate(j, grid, margin);
            for (int k = 0; k < grid; ++k) {
                const double z = grid_coordinate(k, grid, margin);
                const double v = evaluate(fn, x, y, z);
                if (v < s.min) {
                    s.min = v;
                    s.arg = {x, y, z};
                }
                if (v < 0) {
                    ++s.raw;
                    if (evaluate_extended(fn, x, y, z) < 0) {
                        ++s.neg;
                        s.bad.push_back({x, y, z, v});
                    }
                }
            }
        }
    });
    for (const auto& s : slabs) {
        if (s.min < rep.min_value) {
            rep.min_value = s.min;
            rep.argmin = s.arg;
        }
        rep.raw_negatives += s.raw;
        rep.negatives += s.neg;
        rep.counterexamples.insert(rep.counterexamples.end(), s.bad.begin(), s.bad.end());
    }
    rep.evaluations = static_cast<std::size_t>(grid) * grid * grid;
    return rep;
}

/** Values of fn along x -> 1 (x = 1 - 10^{-j}, j = 1..steps) at fixed (y, z). */
inline std::vector<std::array<double, 2>> face_limit(ScanFunction fn, double y, double z, int steps = 8) {
    std::vector<std::array<double, 2>> out;
    for (int j = 1; j <= steps; ++j) {
        const double x = 1 - std::pow(10.0, -j);
        out.push_back({x, evaluate(fn, x, y, z)});
    }
    return out;
}

/** @brief Causal-form classification of one (ga, gb, gc, phi_ba) tuple. */
struct RegionSample {
    double gamma_a = 0, gamma_b = 0, gamma_c = 0, phi_ba = 0;
    bool sr_holds = false;
    bool nonentangled = false;
    bool comp_holds = false;
    bool cauchy_schwarz = false;
};

template <class T>
struct RegionMargins {
    T sr, nonentangled, comp;
};

/** Signed margins: sr and nonentangled hold when >= 0, comp holds when >= 0. */
template <class T>
RegionMargins<T> region_margins(const T& ga, const T& gb, const T& gc, const T& phi) {
    using std::sinh, std::sin, std::exp;
    const T sc = sinh(gc / 2), sp4 = sin(phi / 4), sp2 = sin(phi / 2);
    RegionMargins<T> m;
    m.sr = ga * gb - gc * gc / 4 - phi * phi / 16;
    m.nonentangled = sinh(ga) * sinh(gb) - sc * sc - sp4 * sp4;
    m.comp = 1 - exp(-2 * ga) - exp(-2 * gb) * sp2 * sp2;
    return m;
}

inline RegionSample classify_region(double ga, double gb, double gc, double phi_ba) {
    if (!(ga > 0 && gb > 0)) throw Error("classify_region requires gamma_a, gamma_b > 0");
    const auto m = region_margins(ga, gb, gc, phi_ba);
    RegionSample s{ga, gb, gc, phi_ba, m.sr >= 0, m.nonentangled >= 0, m.comp >= 0,
                   std::abs(gc) <= 2 * std::sqrt(ga * gb)};
    return s;
}

/** @brief Sampling measure for the implication-chain scan. */
struct ChainSampler {
    std::uint64_t seed = 42;
    double gamma_min = 1e-3;
    double gamma_max = 3.0;
    double phi_max = 2 * std::numbers::pi;
};

/** Sample `index`: log-uniform ga, gb; gc uniform within Cauchy-Schwarz; phi_ba uniform. */
inline std::array<double, 4> chain_tuple(const ChainSampler& s, std::uint64_t index) {
    const auto u = uniform_pair(s.seed, index, 0), v = uniform_pair(s.seed, index, 1);
    const double la = std::log(s.gamma_min), lb = std::log(s.gamma_max);
    const double ga = std::exp(la + (lb - la) * u[0]);
    const double gb = std::exp(la + (lb - la) * u[1]);
    const double gc = (2 * v[0] - 1) * 2 * std::sqrt(ga * gb);
    const double phi = (2 * v[1] - 1) * s.phi_max;
    return {ga, gb, gc, phi};
}

/** Random functional tuple: ga, gb in (0, 3], gc within Cauchy-Schwarz, both phases in [-2pi, 2pi]. */
inline InfluenceFunctionals random_functionals(std::uint64_t seed, std::uint64_t index) {
    const auto u = uniform_pair(seed, index, 0), v = uniform_pair(seed, index, 1), w = uniform_pair(seed, index, 2);
    const double ga = 3.0 * (1.0 - u[0]), gb = 3.0 * (1.0 - u[1]);
    const double gc = (2 * v[0] - 1) * 2 * std::sqrt(ga * gb);
    const double tp = 2 * std::numbers::pi;
    return InfluenceFunctionals::make(ga, gb, gc, (2 * v[1] - 1) * tp, (2 * w[0] - 1) * tp);
}

/** @brief Outcome of the implication-chain scan. */
struct ChainReport {
    std::size_t samples = 0;
    std::size_t sr = 0, nonentangled = 0, comp = 0;
    /** sr holds but the state is entangled (refutes sr => nonentangled). */
    std::size_t counterexamples_c1 = 0;
    /** not entangled but complementarity fails (refutes nonentangled => comp). */
    std::size_t counterexamples_c2 = 0;
    /** Apparent violations cleared by extended precision. */
    std::size_t cleared = 0;
    /** nonentangled but not sr: the first region is strictly smaller. */
    std::size_t witnesses_c1 = 0;
    /** comp but entangled: the second region is strictly smaller. */
    std::size_t witnesses_c2 = 0;
    std::optional<std::uint64_t> first_witness_c1, first_witness_c2;
    std::vector<std::uint64_t> counterexample_indices;

    bool passed() const {
        return counterexamples_c1 == 0 && counterexamples_c2 == 0 && witnesses_c1 > 0 && witnesses_c2 > 0;
    }
};

inline ChainReport verify_inclusion_chain(std::size_t n, const ChainSampler& sampler = {},
                                          int workers = default_workers()) {
    constexpr std::size_t block = 1 << 14;
    const std::size_t nb = (n + block - 1) / block;
    std::vector<ChainReport> parts(nb);
    parallel_for(nb, workers, [&](std::size_t b) {
        ChainReport& r = parts[b];
        const std::size_t lo = b * block, hi = std::min(n, lo + block);
        for (std::size_t i = lo; i < hi; ++i) {
            const auto t = chain_tuple(sampler, i);
            const auto s = classify_region(t[0], t[1], t[2], t[3]);
            ++r.samples;
            r.sr += s.sr_holds;
            r.nonentangled += s.nonentangled;
            r.comp += s.comp_holds;
            const bool v1 = s.sr_holds && !s.nonentangled;
            const bool v2 = s.nonentangled && !s.comp_holds;
            if (v1 || v2) {
                const auto m = region_margins<extended>(t[0], t[1], t[2], t[3]);
                const bool e1 = m.sr >= 0 && m.nonentangled < 0;
                const bool e2 = m.nonentangled >= 0 && m.comp < 0;
                if (e1) ++r.counterexamples_c1;
                if (e2) ++r.counterexamples_c2;
                if (e1 || e2)
                    r.counterexample_indices.push_back(i);
                else
                    ++r.cleared;
            }
            if (s.nonentangled && !s.sr_holds) {
                ++r.witnesses_c1;
                if (!r.first_witness_c1) r.first_witness_c1 = i;
            }
            if (s.comp_holds && !s.nonentangled) {
                ++r.witnesses_c2;
                if (!r.first_witness_c2) r.first_witness_c2 = i;
            }
        }
    });
    ChainReport out;
    for (const auto& r : parts) {
        out.samples += r.samples;
        out.sr += r.sr;
        out.nonentangled += r.nonentangled;
        out.comp += r.comp;
        out.counterexamples_c1 += r.counterexamples_c1;
        out.counterexamples_c2 += r.counterexamples_c2;
        out.cleared += r.cleared;
        out.witnesses_c1 += r.witnesses_c1;
        out.witnesses_c2 += r.witnesses_c2;
        if (!out.first_witness_c1) out.first_witness_c1 = r.first_witness_c1;
        if (!out.first_witness_c2) out.first_witness_c2 = r.first_witness_c2;
        out.counterexample_indices.insert(out.counterexample_indices.end(), r.counterexample_indices.begin(),
                                          r.counterexample_indices.end());
    }
    return out;
}

}  // namespace infl
