#pragma once

// Phase-plane paths (velocity vs. acceleration along age) and the landmark
// features read off them: zero-velocity crossings, velocity extrema, radius
// summary, skew direction, bimodality.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "phasefit/bspline.hpp"

namespace phasefit {

struct PhaseSample {
    double age = 0.0;
    double velocity = 0.0;      // rate units per year
    double acceleration = 0.0;  // rate units per year^2
};

/// Sampled phase-plane cycle of one fitted curve, with the exact derivative
/// splines it was sampled from.
struct PhasePath {
    std::vector<PhaseSample> samples;
    double step = 0.0;
    Spline source;
    Spline velocity_spline;
    Spline acceleration_spline;

    double age_lo() const { return samples.front().age; }
    double age_hi() const { return samples.back().age; }
};

enum class CrossingDirection { down, up };

enum class SkewDirection { right_skewed, left_skewed, symmetric };

inline const char* to_string(CrossingDirection d) {
    return d == CrossingDirection::down ? "down" : "up";
}

inline const char* to_string(SkewDirection s) {
    switch (s) {
        case SkewDirection::right_skewed: return "right-skewed";
        case SkewDirection::left_skewed: return "left-skewed";
        default: return "symmetric";
    }
}

/// Age where velocity changes sign. A down crossing (positive to negative)
/// marks a local maximum of the fitted curve, an up crossing a local minimum.
struct ZeroVelocityCrossing {
    double age = 0.0;
    CrossingDirection direction = CrossingDirection::down;
    double curve_value = 0.0;  // fitted curve level at the crossing
};

/// Interior zero of acceleration: a local extremum of velocity.
struct VelocityExtremum {
    double age = 0.0;
    double velocity = 0.0;
    bool is_maximum = false;
};

struct PhaseFeatures {
    std::vector<ZeroVelocityCrossing> zero_velocity_ages;
    std::vector<VelocityExtremum> velocity_local_extrema;
    double max_positive_velocity_age = 0.0;
    double max_positive_velocity = 0.0;
    double max_negative_velocity_age = 0.0;
    double max_negative_velocity = 0.0;
    double max_radius = 0.0;
    double mean_radius = 0.0;
    SkewDirection skew_direction = SkewDirection::symmetric;
    bool bimodal = false;
};

struct RadiusComparison {
    double max_radius_a = 0.0;
    double max_radius_b = 0.0;
    double ratio = 0.0;
};

/// Sample the first and second derivative splines from domain_lo to
/// domain_hi inclusive at the given step.
inline PhasePath phase_path(const Spline& s, double step) {
    if (s.degree() < 2)
        throw std::invalid_argument("phase_path: spline degree must be at least 2");
    if (!(step > 0.0)) throw std::invalid_argument("phase_path: step must be positive");

    Spline vel = derivative(s);
    Spline acc = derivative(vel);
    const double lo = s.domain_lo(), hi = s.domain_hi();

    std::vector<PhaseSample> samples;
    samples.reserve(static_cast<std::size_t>((hi - lo) / step) + 2);
    const double eps = step * 1e-9;
    for (std::size_t k = 0;; ++k) {
        const double age = lo + static_cast<double>(k) * step;
        if (age >= hi - eps) break;
        samples.push_back({age, eval_spline(vel, age), eval_spline(acc, age)});
    }
    samples.push_back({hi, eval_spline(vel, hi), eval_spline(acc, hi)});
    return PhasePath{std::move(samples), step, s, std::move(vel), std::move(acc)};
}

namespace detail {

/// Bisect f on [lo, hi] (f changes sign there) down to an interval of
/// kRootTolerance years; returns the midpoint.
inline constexpr double kRootTolerance = 1e-6;

template <typename F>
double bisect_root(F&& f, double lo, double hi) {
    double flo = f(lo);
    if (flo == 0.0) return lo;
    while (hi - lo > kRootTolerance) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = f(mid);
        if (fmid == 0.0) return mid;
        if ((flo > 0.0) != (fmid > 0.0)) {
            hi = mid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Sign-change scan over samples of `values`; each crossing is refined by
/// bisection on `fine`. Touch-and-go zeros (no sign flip) are skipped.
template <typename Getter>
std::vector<std::pair<double, bool>> crossings(const std::vector<PhaseSample>& samples,
                                               Getter value, const Spline& fine) {
    std::vector<std::pair<double, bool>> out;  // (age, was_positive_before)
    std::size_t last = 0;
    bool have_last = false;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double v = value(samples[i]);
        if (v == 0.0) continue;
        if (have_last) {
            const double prev = value(samples[last]);
            if ((prev > 0.0) != (v > 0.0)) {
                const double age = bisect_root(
                    [&](double u) { return eval_spline(fine, u); }, samples[last].age,
                    samples[i].age);
                out.emplace_back(age, prev > 0.0);
            }
        }
        last = i;
        have_last = true;
    }
    return out;
}

}  // namespace detail

/**
 * Landmarks of a phase path. Zero-velocity ages and velocity extrema are
 * located by sign changes between adjacent samples and refined by bisection
 * on the exact derivative splines to 1e-6 years. The radius summary uses
 * per-axis normalization by the path's own maxima, and the skew rule
 * compares the extreme velocities with a tie band of 1% of max |v|.
 */
inline PhaseFeatures extract_features(const PhasePath& path) {
    if (path.samples.size() < 3)
        throw std::invalid_argument("extract_features: degenerate path (need at least 3 samples)");

    PhaseFeatures f;

    for (const auto& [age, was_positive] :
         detail::crossings(path.samples, [](const PhaseSample& s) { return s.velocity; },
                           path.velocity_spline)) {
        f.zero_velocity_ages.push_back(
            {age, was_positive ? CrossingDirection::down : CrossingDirection::up,
             eval_spline(path.source, age)});
    }

    // an acceleration zero inside the first or last sampling step is a
    // clamped-boundary artifact, not a feature
    const double lo = path.age_lo(), hi = path.age_hi();
    const double boundary_band = std::max(path.step, 1e-9 * (hi - lo));
    for (const auto& [age, was_positive] :
         detail::crossings(path.samples, [](const PhaseSample& s) { return s.acceleration; },
                           path.acceleration_spline)) {
        if (age <= lo + boundary_band || age >= hi - boundary_band) continue;
        f.velocity_local_extrema.push_back(
            {age, eval_spline(path.velocity_spline, age), was_positive});
    }

    // extreme velocities over samples and refined extrema
    double vmax = path.samples.front().velocity, vmin = vmax;
    double vmax_age = path.samples.front().age, vmin_age = vmax_age;
    auto consider = [&](double age, double v) {
        if (v > vmax) { vmax = v; vmax_age = age; }
        if (v < vmin) { vmin = v; vmin_age = age; }
    };
    for (const PhaseSample& s : path.samples) consider(s.age, s.velocity);
    for (const VelocityExtremum& e : f.velocity_local_extrema) consider(e.age, e.velocity);
    f.max_positive_velocity = vmax;
    f.max_positive_velocity_age = vmax_age;
    f.max_negative_velocity = vmin;
    f.max_negative_velocity_age = vmin_age;

    // radius summary on normalized axes
    double vabs = 0.0, aabs = 0.0;
    for (const PhaseSample& s : path.samples) {
        vabs = std::max(vabs, std::abs(s.velocity));
        aabs = std::max(aabs, std::abs(s.acceleration));
    }
    double radius_sum = 0.0;
    for (const PhaseSample& s : path.samples) {
        const double vn = vabs > 0.0 ? s.velocity / vabs : 0.0;
        const double an = aabs > 0.0 ? s.acceleration / aabs : 0.0;
        const double r = std::hypot(vn, an);
        radius_sum += r;
        f.max_radius = std::max(f.max_radius, r);
    }
    f.mean_radius = radius_sum / static_cast<double>(path.samples.size());

    // net-velocity skew with a 1% tie band
    const double scale = std::max(std::abs(vmax), std::abs(vmin));
    const double tau = 0.01 * scale;
    if (scale == 0.0 || std::abs(vmax - (-vmin)) <= tau) {
        f.skew_direction = SkewDirection::symmetric;
    } else if (vmax > -vmin) {
        f.skew_direction = SkewDirection::right_skewed;
    } else {
        f.skew_direction = SkewDirection::left_skewed;
    }

    // bimodality: two or more velocity maxima strictly before the first
    // down crossing
    double first_down = std::numeric_limits<double>::infinity();
    for (const ZeroVelocityCrossing& z : f.zero_velocity_ages)
        if (z.direction == CrossingDirection::down) {
            first_down = z.age;
            break;
        }
    int maxima_before = 0;
    for (const VelocityExtremum& e : f.velocity_local_extrema)
        if (e.is_maximum && e.age < first_down) ++maxima_before;
    f.bimodal = maxima_before >= 2;

    return f;
}

/// Compare the cycle sizes of two paths over the same age domain. The
/// normalization constants are taken jointly over both paths so the radii
/// are on a common scale.
inline RadiusComparison compare_paths(const PhasePath& a, const PhasePath& b) {
    const double span = std::max(a.age_hi() - a.age_lo(), 1.0);
    if (std::abs(a.age_lo() - b.age_lo()) > 1e-9 * span ||
        std::abs(a.age_hi() - b.age_hi()) > 1e-9 * span)
        throw std::invalid_argument("compare_paths: paths cover different age domains");

    double vabs = 0.0, aabs = 0.0;
    for (const PhasePath* p : {&a, &b})
        for (const PhaseSample& s : p->samples) {
            vabs = std::max(vabs, std::abs(s.velocity));
            aabs = std::max(aabs, std::abs(s.acceleration));
        }

    auto max_radius = [&](const PhasePath& p) {
        double m = 0.0;
        for (const PhaseSample& s : p.samples) {
            const double vn = vabs > 0.0 ? s.velocity / vabs : 0.0;
            const double an = aabs > 0.0 ? s.acceleration / aabs : 0.0;
            m = std::max(m, std::hypot(vn, an));
        }
        return m;
    };

    RadiusComparison cmp;
    cmp.max_radius_a = max_radius(a);
    cmp.max_radius_b = max_radius(b);
    cmp.ratio = cmp.max_radius_b > 0.0
                    ? cmp.max_radius_a / cmp.max_radius_b
                    : (cmp.max_radius_a == 0.0 ? 1.0
                                               : std::numeric_limits<double>::infinity());
    return cmp;
}

}  // namespace phasefit
