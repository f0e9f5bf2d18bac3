#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "core.hpp"

namespace infl {

/** @brief Position and velocity of a branch at one instant. */
struct Kinematics {
    Vec3 x;
    Vec3 v;
};

/**
 * @brief Sampled trajectory of one branch with its coupling and smearing width.
 *
 * Between samples the position is the cubic Hermite interpolant of the sampled
 * positions and velocities; the velocity is its exact derivative, so the
 * smeared current built from it is conserved.
 */
class Worldline {
public:
    Worldline(std::vector<double> t, std::vector<Vec3> x, std::vector<Vec3> v, double coupling, double sigma)
        : t_(std::move(t)), x_(std::move(x)), v_(std::move(v)), coupling_(coupling), sigma_(sigma) {
        if (t_.size() < 2) throw Error("worldline needs at least two samples");
        if (x_.size() != t_.size() || v_.size() != t_.size()) throw Error("worldline sample arrays differ in length");
        if (!std::isfinite(coupling_)) throw Error("worldline coupling is not finite");
        if (!(sigma_ > 0) || !std::isfinite(sigma_)) throw Error("smearing width must be positive");
        for (std::size_t i = 0; i < t_.size(); ++i) {
            if (!std::isfinite(t_[i]) || !finite(x_[i]) || !finite(v_[i])) throw Error("worldline sample is not finite");
            if (i > 0 && !(t_[i] > t_[i - 1])) throw Error("worldline times must be strictly increasing");
            if (!(norm(v_[i]) < 1.0)) throw Error("worldline speed must stay below 1");
        }
    }

    double t_begin() const { return t_.front(); }
    double t_end() const { return t_.back(); }
    double coupling() const { return coupling_; }
    double sigma() const { return sigma_; }
    std::size_t size() const { return t_.size(); }
    const std::vector<double>& times() const { return t_; }
    const std::vector<Vec3>& positions() const { return x_; }
    const std::vector<Vec3>& velocities() const { return v_; }

    bool active(double t) const { return t >= t_.front() && t <= t_.back(); }

    /** Interpolated state; outside the window the branch rests at its endpoint. */
    Kinematics at(double t) const {
        if (t <= t_.front()) return {x_.front(), {}};
        if (t >= t_.back()) return {x_.back(), {}};
        auto it = std::upper_bound(t_.begin(), t_.end(), t);
        std::size_t i = static_cast<std::size_t>(it - t_.begin()) - 1;
        return on_segment(i, t);
    }

    Kinematics on_segment(std::size_t i, double t) const {
        const double h = t_[i + 1] - t_[i];
        const double s = (t - t_[i]) / h;
        const double s2 = s * s, s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
        const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
        const double d00 = 6 * s2 - 6 * s, d10 = 3 * s2 - 4 * s + 1;
        const double d01 = -6 * s2 + 6 * s, d11 = 3 * s2 - 2 * s;
        Kinematics k;
        k.x = h00 * x_[i] + (h10 * h) * v_[i] + h01 * x_[i + 1] + (h11 * h) * v_[i + 1];
        k.v = (d00 / h) * x_[i] + d10 * v_[i] + (d01 / h) * x_[i + 1] + d11 * v_[i + 1];
        return k;
    }

    double max_speed() const {
        double m = 0;
        for (const auto& v : v_) m = std::max(m, norm(v));
        return m;
    }

    Worldline scaled(double s) const { return Worldline(t_, x_, v_, coupling_ * s, sigma_); }

private:
    std::vector<double> t_;
    std::vector<Vec3> x_;
    std::vector<Vec3> v_;
    double coupling_;
    double sigma_;
};

/** @brief Right/left branch pair of one superposed particle. */
class BranchedSource {
public:
    BranchedSource(Worldline right, Worldline left, FieldType field, Label label)
        : right_(std::move(right)), left_(std::move(left)), field_(field), label_(label) {
        const double span = right_.t_end() - right_.t_begin();
        const double ttol = 1e-12 * std::max(1.0, std::abs(right_.t_end()));
        if (std::abs(right_.t_begin() - left_.t_begin()) > ttol || std::abs(right_.t_end() - left_.t_end()) > ttol)
            throw Error("branches must share their time span");
        if (right_.coupling() != left_.coupling()) throw Error("branches must share the coupling");
        if (right_.sigma() != left_.sigma()) throw Error("branches must share the smearing width");
        const Vec3 c0 = right_.positions().front();
        const double scale = std::max({1.0, norm(c0), span});
        if (norm(c0 - left_.positions().front()) > 1e-12 * scale ||
            norm(right_.positions().back() - left_.positions().back()) > 1e-12 * scale)
            throw Error("branches must coincide at both ends of the window");
        analyse_geometry();
    }

    const Worldline& right() const { return right_; }
    const Worldline& left() const { return left_; }
    const Worldline& branch(int p) const { return p == 0 ? right_ : left_; }
    FieldType field() const { return field_; }
    Label label() const { return label_; }
    double coupling() const { return right_.coupling(); }
    double sigma() const { return right_.sigma(); }
    double t_begin() const { return right_.t_begin(); }
    double t_end() const { return right_.t_end(); }

    /** Reference point used for multipole bookkeeping (the split point). */
    const Vec3& center() const { return center_; }
    /** Upper bound on |X(t) - center| over both branches. */
    double radius() const { return radius_; }
    /** Common line of motion when both branches stay on one line through the center. */
    const std::optional<Vec3>& axis() const { return axis_; }
    bool trivial() const { return trivial_; }
    double max_speed() const { return std::max(right_.max_speed(), left_.max_speed()); }

    BranchedSource with_coupling_scaled(double s) const {
        return BranchedSource(right_.scaled(s), left_.scaled(s), field_, label_);
    }
    BranchedSource relabeled(Label l) const { return BranchedSource(right_, left_, field_, l); }

private:
    void analyse_geometry() {
        center_ = right_.positions().front();
        double r = 0;
        Vec3 far{};
        trivial_ = true;
        for (int p = 0; p < 2; ++p) {
            const auto& w = branch(p);
            for (std::size_t i = 0; i < w.size(); ++i) {
                const double d = norm(w.positions()[i] - center_);
                if (d > r) {
                    r = d;
                    far = w.positions()[i] - center_;
                }
            }
        }
        for (std::size_t i = 0; i < right_.size() && trivial_; ++i) {
            if (right_.times()[i] != left_.times()[i] || norm(right_.positions()[i] - left_.positions()[i]) != 0.0 ||
                norm(right_.velocities()[i] - left_.velocities()[i]) != 0.0)
                trivial_ = false;
        }
        if (right_.size() != left_.size()) trivial_ = false;
        // Hermite overshoot between samples is bounded by the velocity term.
        double h = 0, vmax = 0;
        for (int p = 0; p < 2; ++p) {
            const auto& w = branch(p);
            for (std::size_t i = 0; i + 1 < w.size(); ++i) h = std::max(h, w.times()[i + 1] - w.times()[i]);
            vmax = std::max(vmax, w.max_speed());
        }
        radius_ = r + 0.25 * h * vmax;
        axis_.reset();
        if (r == 0) return;
        const Vec3 n = far * (1.0 / norm(far));
        for (int p = 0; p < 2; ++p) {
            const auto& w = branch(p);
            for (std::size_t i = 0; i < w.size(); ++i) {
                const Vec3 d = w.positions()[i] - center_;
                if (norm(d - dot(d, n) * n) > 1e-13 * r) return;
                const Vec3& v = w.velocities()[i];
                if (norm(v - dot(v, n) * n) > 1e-13 * std::max(1e-300, norm(v))) return;
            }
        }
        axis_ = n;
    }

    Worldline right_;
    Worldline left_;
    FieldType field_;
    Label label_;
    Vec3 center_;
    double radius_ = 0;
    std::optional<Vec3> axis_;
    bool trivial_ = false;
};

/** @brief Parameters of the split, hold and recombine trajectory. */
struct SplitPathParams {
    double t_start = 0.0;
    double t_total = 1.0;
    double separation = 0.1;
    double hold_fraction = 0.5;
    Vec3 center{};
    Vec3 axis{0, 0, 1};
    double coupling = 1.0;
    std::optional<double> sigma;
    int intervals = 256;
    FieldType field = FieldType::EM;
    Label label = Label::A;
};

namespace detail {

// Smooth step with vanishing first and second derivatives at both ends.
inline double ramp(double u) { return u - std::sin(2 * std::numbers::pi * u) / (2 * std::numbers::pi); }
inline double ramp_rate(double u) {
    const double s = std::sin(std::numbers::pi * u);
    return 2 * s * s;
}

}  // namespace detail

/** Peak branch speed of the split path, reached in the middle of each ramp. */
inline double split_path_peak_speed(const SplitPathParams& p) {
    const double tau = 0.5 * (1.0 - p.hold_fraction) * p.t_total;
    return p.separation / tau;
}

/** Offset s(t) along the axis and its rate for the right branch; left is -s. */
inline std::pair<double, double> split_path_offset(const SplitPathParams& p, double t) {
    const double tau = 0.5 * (1.0 - p.hold_fraction) * p.t_total;
    const double half = 0.5 * p.separation;
    const double u = t - p.t_start;
    if (u <= 0 || u >= p.t_total) return {0.0, 0.0};
    if (u < tau) return {half * detail::ramp(u / tau), half / tau * detail::ramp_rate(u / tau)};
    if (u <= p.t_total - tau) return {half, 0.0};
    const double w = (u - (p.t_total - tau)) / tau;
    return {half * (1.0 - detail::ramp(w)), -half / tau * detail::ramp_rate(w)};
}

inline BranchedSource make_split_path(const SplitPathParams& p) {
    const double sig = p.sigma ? *p.sigma : p.separation / 20.0;
    if (!std::isfinite(p.t_start) || !std::isfinite(p.t_total) || !std::isfinite(p.separation) ||
        !std::isfinite(p.hold_fraction) || !finite(p.center) || !finite(p.axis) || !std::isfinite(p.coupling) ||
        !std::isfinite(sig))
        throw Error("split path parameters must be finite");
    if (!(p.t_total > 0)) throw Error("t_total must be positive");
    if (p.separation < 0) throw Error("separation must be non-negative");
    if (!(p.hold_fraction > 0 && p.hold_fraction < 1)) throw Error("hold_fraction must lie in (0, 1)");
    if (!(sig > 0)) throw Error("smearing width must be positive");
    if (p.intervals < 4) throw Error("split path needs at least 4 intervals");
    const double an = norm(p.axis);
    if (!(an > 0)) throw Error("axis must be a nonzero vector");
    if (!(split_path_peak_speed(p) < 1.0)) throw Error("split path is too fast: peak speed reaches 1");
    const Vec3 n = p.axis * (1.0 / an);

    const std::size_t m = static_cast<std::size_t>(p.intervals) + 1;
    std::vector<double> t(m);
    std::vector<Vec3> xr(m), vr(m), xl(m), vl(m);
    for (std::size_t i = 0; i < m; ++i) {
        t[i] = p.t_start + p.t_total * static_cast<double>(i) / static_cast<double>(p.intervals);
        auto [s, sd] = split_path_offset(p, t[i]);
        if (i == 0 || i + 1 == m) s = sd = 0.0;
        xr[i] = p.center + s * n;
        vr[i] = sd * n;
        xl[i] = p.center - s * n;
        vl[i] = -sd * n;
    }
    return BranchedSource(Worldline(t, xr, vr, p.coupling, sig), Worldline(t, xl, vl, p.coupling, sig), p.field,
                          p.label);
}

/** Normalized isotropic Gaussian of width sigma at distance r. */
inline double gaussian3(double r, double sigma) {
    const double norm3 = std::pow(2 * std::numbers::pi * sigma * sigma, -1.5);
    return norm3 * std::exp(-r * r / (2 * sigma * sigma));
}

/** Smeared difference current of an EM source at a spacetime point. */
inline FourVector delta_current(const BranchedSource& src, const SpacetimePoint& x) {
    if (src.field() != FieldType::EM) throw Error("delta_current requires an EM source");
    FourVector j{};
    if (x.t < src.t_begin() || x.t > src.t_end()) return j;
    for (int p = 0; p < 2; ++p) {
        const Kinematics k = src.branch(p).at(x.t);
        const double g = (p == 0 ? 1.0 : -1.0) * src.coupling() * gaussian3(norm(x.x - k.x), src.sigma());
        const FourVector u = four_velocity(k.v);
        for (int m = 0; m < 4; ++m) j[m] += g * u[m];
    }
    return j;
}

/** Smeared difference stress tensor of a GR source at a spacetime point. */
inline Tensor4 delta_stress(const BranchedSource& src, const SpacetimePoint& x) {
    if (src.field() != FieldType::GR) throw Error("delta_stress requires a GR source");
    Tensor4 t{};
    if (x.t < src.t_begin() || x.t > src.t_end()) return t;
    for (int p = 0; p < 2; ++p) {
        const Kinematics k = src.branch(p).at(x.t);
        const double g = (p == 0 ? 1.0 : -1.0) * src.coupling() * gaussian3(norm(x.x - k.x), src.sigma());
        const FourVector u = four_velocity(k.v);
        for (int m = 0; m < 4; ++m)
            for (int n = m; n < 4; ++n) t[m][n] += g * u[m] * u[n];
    }
    for (int m = 0; m < 4; ++m)
        for (int n = 0; n < m; ++n) t[m][n] = t[n][m];
    return t;
}

}  // namespace infl
