#pragma once

// Penalized least-squares spline fitting for age-indexed rate curves:
// banded normal equations, derivative roughness penalty, GCV selection.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "phasefit/bspline.hpp"
#include "phasefit/matrix.hpp"
#include "phasefit/quadrature.hpp"

namespace phasefit {

struct Observation {
    double age = 0.0;   // years
    double rate = 0.0;  // events per person-year
};

/// Raw observations for one labelled curve (e.g. one calendar year).
/// Ages strictly increasing, rates finite and non-negative.
class RateCurve {
public:
    RateCurve(std::string label, std::vector<Observation> points)
        : label_(std::move(label)), points_(std::move(points)) {
        if (points_.empty()) throw std::invalid_argument("RateCurve: empty curve");
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (!std::isfinite(points_[i].age) || !std::isfinite(points_[i].rate))
                throw std::invalid_argument("RateCurve: non-finite entry");
            if (points_[i].rate < 0.0)
                throw std::invalid_argument("RateCurve: negative rate at age " +
                                            std::to_string(points_[i].age));
            if (i > 0 && !(points_[i - 1].age < points_[i].age))
                throw std::invalid_argument("RateCurve: ages must be strictly increasing");
        }
    }

    const std::string& label() const { return label_; }
    const std::vector<Observation>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    double age_lo() const { return points_.front().age; }
    double age_hi() const { return points_.back().age; }

private:
    std::string label_;
    std::vector<Observation> points_;
};

/// Fitting options. An unset interior-knot count places one knot at every
/// interior observation age; an unset lambda selects it by GCV.
struct FitConfig {
    int degree = 3;
    std::optional<std::size_t> n_interior{};
    int penalty_order = 2;
    std::optional<double> lambda{};
};

struct FitResult {
    Spline spline;
    double lambda_used = 0.0;
    double gcv_score = 0.0;
    double residual_sse = 0.0;
};

inline constexpr std::size_t kGcvGridSize = 50;
inline constexpr double kGcvLambdaMin = 1e-8;
inline constexpr double kGcvLambdaMax = 1e4;

namespace detail {

/// Symmetric banded matrix, lower storage: entry(d, j) = A(j+d, j).
struct SymBand {
    std::size_t n = 0;
    std::size_t bw = 0;  // half bandwidth; A(i,j) = 0 for |i-j| > bw
    std::vector<double> a;

    SymBand() = default;
    SymBand(std::size_t n_, std::size_t bw_) : n(n_), bw(bw_), a((bw_ + 1) * n_, 0.0) {}

    double& at(std::size_t d, std::size_t j) { return a[d * n + j]; }
    double at(std::size_t d, std::size_t j) const { return a[d * n + j]; }

    double full(std::size_t i, std::size_t j) const {
        const std::size_t lo = i < j ? i : j, hi = i < j ? j : i;
        return hi - lo > bw ? 0.0 : at(hi - lo, lo);
    }

    Matrix dense() const {
        Matrix m(n, n);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t d = 0; d <= bw && j + d < n; ++d)
                m(j + d, j) = m(j, j + d) = at(d, j);
        return m;
    }
};

/// In-place banded Cholesky A = L L^T; throws if a pivot collapses.
inline void cholesky_band(SymBand& m) {
    double max_diag = 0.0;
    for (std::size_t j = 0; j < m.n; ++j) max_diag = std::max(max_diag, m.at(0, j));
    const double floor = std::max(max_diag, 1.0) * 1e-13;
    for (std::size_t j = 0; j < m.n; ++j) {
        double s = m.at(0, j);
        const std::size_t k0 = j > m.bw ? j - m.bw : 0;
        for (std::size_t k = k0; k < j; ++k) {
            const double ljk = m.at(j - k, k);
            s -= ljk * ljk;
        }
        if (!(s > floor)) throw std::runtime_error("normal equations are numerically singular");
        const double ljj = std::sqrt(s);
        m.at(0, j) = ljj;
        for (std::size_t d = 1; d <= m.bw && j + d < m.n; ++d) {
            const std::size_t i = j + d;
            double t = m.at(d, j);
            const std::size_t kk0 = i > m.bw ? i - m.bw : 0;
            for (std::size_t k = kk0; k < j; ++k) t -= m.at(i - k, k) * m.at(j - k, k);
            m.at(d, j) = t / ljj;
        }
    }
}

/// Solve L L^T x = b with the factor from cholesky_band.
inline std::vector<double> solve_band(const SymBand& L, std::vector<double> b) {
    const std::size_t n = L.n;
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        const std::size_t k0 = i > L.bw ? i - L.bw : 0;
        for (std::size_t k = k0; k < i; ++k) s -= L.at(i - k, k) * b[k];
        b[i] = s / L.at(0, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t d = 1; d <= L.bw && ii + d < n; ++d)
            s -= L.at(d, ii) * b[ii + d];
        b[ii] = s / L.at(0, ii);
    }
    return b;
}

/// B^T B and B^T y accumulated from the local basis windows.
inline void assemble_normal(const KnotVector& kv, const std::vector<Observation>& obs,
                            SymBand& btb, std::vector<double>& bty) {
    const std::size_t bw = static_cast<std::size_t>(kv.degree());
    btb = SymBand(kv.basis_count(), bw);
    bty.assign(kv.basis_count(), 0.0);
    for (const Observation& o : obs) {
        const BasisWindow w = basis_window(kv, o.age);
        for (int r = 0; r < w.count; ++r) {
            const std::size_t gr = w.first + static_cast<std::size_t>(r);
            bty[gr] += o.rate * w.values[r];
            for (int c = 0; c <= r; ++c)
                btb.at(static_cast<std::size_t>(r - c), w.first + static_cast<std::size_t>(c)) +=
                    w.values[r] * w.values[c];
        }
    }
}

/// Roughness penalty R_ij = integral of D^q N_i * D^q N_j over the domain.
/// The integrand is piecewise polynomial of degree 2(p-q), so a
/// (p-q+1)-point Gauss-Legendre rule per knot span integrates it exactly.
inline SymBand assemble_roughness(const KnotVector& kv, int penalty_order) {
    const int p = kv.degree();
    if (penalty_order < 0 || penalty_order > p)
        throw std::invalid_argument("roughness penalty order must satisfy q <= degree");
    const std::size_t bw = static_cast<std::size_t>(p);
    SymBand r(kv.basis_count(), bw);
    const QuadratureRule rule =
        gauss_legendre(static_cast<std::size_t>(p - penalty_order) + 1);
    const std::vector<double>& U = kv.knots();
    const std::size_t m = U.size() - 1;
    for (std::size_t span = static_cast<std::size_t>(p); span < m - static_cast<std::size_t>(p);
         ++span) {
        const double a = U[span], b = U[span + 1];
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (std::size_t g = 0; g < rule.nodes.size(); ++g) {
            const double x = mid + half * rule.nodes[g];
            const double wq = half * rule.weights[g];
            const BasisDerivs bd = basis_derivatives(kv, x, penalty_order);
            const std::vector<double>& dq = bd.d[static_cast<std::size_t>(penalty_order)];
            for (std::size_t rr = 0; rr < dq.size(); ++rr)
                for (std::size_t cc = 0; cc <= rr; ++cc)
                    r.at(rr - cc, bd.first + cc) += wq * dq[rr] * dq[cc];
        }
    }
    return r;
}

struct GcvEvaluation {
    std::vector<double> coefficients;
    double sse = 0.0;
    double gcv = std::numeric_limits<double>::infinity();
};

/// Solve (B^T B + lambda R) c = B^T y and score the fit with
/// GCV = n SSE / (n - tr H)^2, H the hat matrix.
inline GcvEvaluation evaluate_lambda(const SymBand& btb, const SymBand& rough,
                                     const std::vector<double>& bty,
                                     const std::vector<Observation>& obs,
                                     const KnotVector& kv, double lambda) {
    const std::size_t n = btb.n;
    SymBand m(n, btb.bw);
    for (std::size_t i = 0; i < m.a.size(); ++i) m.a[i] = btb.a[i] + lambda * rough.a[i];
    cholesky_band(m);

    GcvEvaluation ev;
    ev.coefficients = solve_band(m, bty);

    double sse = 0.0;
    for (const Observation& o : obs) {
        const BasisWindow w = basis_window(kv, o.age);
        double fitted = 0.0;
        for (int j = 0; j < w.count; ++j)
            fitted += ev.coefficients[w.first + static_cast<std::size_t>(j)] * w.values[j];
        const double resid = o.rate - fitted;
        sse += resid * resid;
    }
    ev.sse = sse;

    // tr H = tr((B^T B + lambda R)^{-1} B^T B), column by column
    double trace = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> col(n, 0.0);
        const std::size_t lo = j > btb.bw ? j - btb.bw : 0;
        const std::size_t hi = std::min(n - 1, j + btb.bw);
        for (std::size_t i = lo; i <= hi; ++i) col[i] = btb.full(i, j);
        const std::vector<double> x = solve_band(m, std::move(col));
        trace += x[j];
    }
    const double nobs = static_cast<double>(obs.size());
    const double denom = nobs - trace;
    ev.gcv = denom > 1e-9 ? nobs * ev.sse / (denom * denom)
                          : std::numeric_limits<double>::infinity();
    return ev;
}

}  // namespace detail

/// Basis values tabulated at the observation ages: entry (j, i) = N_i(age_j).
/// Each row sums to one and has at most degree+1 nonzero entries.
inline Matrix design_matrix(const KnotVector& kv, std::span<const double> ages) {
    Matrix m(ages.size(), kv.basis_count());
    for (std::size_t r = 0; r < ages.size(); ++r) {
        const BasisWindow w = basis_window(kv, ages[r]);
        for (int j = 0; j < w.count; ++j)
            m(r, w.first + static_cast<std::size_t>(j)) = w.values[j];
    }
    return m;
}

/// Symmetric positive semidefinite penalty matrix for the q-th derivative;
/// its null space is spanned by polynomials of degree below q.
inline Matrix roughness_matrix(const KnotVector& kv, int penalty_order) {
    return detail::assemble_roughness(kv, penalty_order).dense();
}

/// Knot vector a FitConfig implies for the given observations: either the
/// requested number of equally spaced interior knots, or one interior knot
/// per interior observation age.
inline KnotVector knots_for(const RateCurve& curve, const FitConfig& cfg) {
    const double lo = curve.age_lo(), hi = curve.age_hi();
    if (!(lo < hi))
        throw std::invalid_argument("fit: need at least two distinct ages");
    if (cfg.n_interior)
        return make_clamped_knots(lo, hi, *cfg.n_interior, cfg.degree);
    std::vector<double> interior;
    interior.reserve(curve.size());
    for (std::size_t i = 1; i + 1 < curve.size(); ++i)
        interior.push_back(curve.points()[i].age);
    return make_clamped_knots_at(lo, hi, interior, cfg.degree);
}

/**
 * Penalized least-squares fit: minimizes |y - Bc|^2 + lambda c^T R c via the
 * banded normal equations. With no lambda given, the generalized
 * cross-validation score is minimized over a 50-point logarithmic grid on
 * [1e-8, 1e4]; ties go to the smaller lambda.
 */
inline FitResult fit(const RateCurve& curve, const FitConfig& cfg) {
    if (cfg.degree < 0 || cfg.degree > kMaxDegree)
        throw std::invalid_argument("fit: degree must be in [0, " + std::to_string(kMaxDegree) +
                                    "]");
    if (cfg.penalty_order >= cfg.degree + 1)
        throw std::invalid_argument("fit: penalty order must be below degree + 1");
    if (curve.size() < static_cast<std::size_t>(cfg.degree) + 1)
        throw std::invalid_argument("fit: need at least degree + 1 observations");
    if (cfg.lambda && (!(*cfg.lambda >= 0.0) || !std::isfinite(*cfg.lambda)))
        throw std::invalid_argument("fit: lambda must be a finite non-negative number");

    const KnotVector kv = knots_for(curve, cfg);
    detail::SymBand btb;
    std::vector<double> bty;
    detail::assemble_normal(kv, curve.points(), btb, bty);
    const detail::SymBand rough = detail::assemble_roughness(kv, cfg.penalty_order);

    double lambda_used = 0.0;
    detail::GcvEvaluation best;
    if (cfg.lambda) {
        lambda_used = *cfg.lambda;
        try {
            best = detail::evaluate_lambda(btb, rough, bty, curve.points(), kv, lambda_used);
        } catch (const std::runtime_error&) {
            throw std::runtime_error(
                "fit: singular system (rank-deficient basis needs lambda > 0)");
        }
    } else {
        bool found = false;
        for (std::size_t g = 0; g < kGcvGridSize; ++g) {
            const double t = static_cast<double>(g) / static_cast<double>(kGcvGridSize - 1);
            const double lambda =
                std::exp(std::log(kGcvLambdaMin) +
                         t * (std::log(kGcvLambdaMax) - std::log(kGcvLambdaMin)));
            detail::GcvEvaluation ev;
            try {
                ev = detail::evaluate_lambda(btb, rough, bty, curve.points(), kv, lambda);
            } catch (const std::runtime_error&) {
                continue;  // unusable candidate
            }
            if (!found || ev.gcv < best.gcv) {
                best = std::move(ev);
                lambda_used = lambda;
                found = true;
            }
        }
        if (!found)
            throw std::runtime_error("fit: no GCV candidate produced a solvable system");
    }

    return FitResult{Spline(kv, std::move(best.coefficients)), lambda_used, best.gcv, best.sse};
}

}  // namespace phasefit
