#pragma once

// Clamped B-spline bases: knot construction, Cox-de Boor evaluation,
// spline evaluation and exact derivative splines.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace phasefit {

/// Hard cap on the spline degree; keeps every fixed-size work array bounded.
inline constexpr int kMaxDegree = 10;

/// Single basis function N_{i,p}(u) straight from the recursive definition:
/// N_{i,p} = w_{i,p-1} N_{i,p-1} + (1 - w_{i+1,p-1}) N_{i+1,p-1},
/// w_{i,p-1} = (u - u_i)/(u_{i+p} - u_i), with 0/0 ratios defined as 0.
/// Works on any non-decreasing knot sequence. Spans are half-open except the
/// last positive span, which is closed so the right boundary is evaluable.
inline double basis_value(std::span<const double> knots, std::size_t i, int degree, double u) {
    if (degree < 0 || degree > kMaxDegree)
        throw std::invalid_argument("basis_value: degree out of range");
    if (i + static_cast<std::size_t>(degree) + 1 >= knots.size())
        throw std::invalid_argument("basis_value: basis index out of range");
    if (degree == 0) {
        if (knots[i] <= u && u < knots[i + 1]) return 1.0;
        // closed right end of the global domain
        if (u == knots[i + 1] && u == knots.back() && knots[i] < knots[i + 1]) return 1.0;
        return 0.0;
    }
    const double left_den = knots[i + degree] - knots[i];
    const double right_den = knots[i + degree + 1] - knots[i + 1];
    double value = 0.0;
    if (left_den > 0.0)
        value += (u - knots[i]) / left_den * basis_value(knots, i, degree - 1, u);
    if (right_den > 0.0)
        value += (knots[i + degree + 1] - u) / right_den * basis_value(knots, i + 1, degree - 1, u);
    return value;
}

/// Non-decreasing breakpoints in clamped (open) form: the first and last
/// knot each repeated degree+1 times, interior knots strictly increasing.
/// With m+1 knots and degree p there are n = m - p basis functions and the
/// evaluation domain is [u_p, u_{m-p}].
class KnotVector {
public:
    KnotVector(std::vector<double> knots, int degree)
        : knots_(std::move(knots)), degree_(degree) {
        if (degree_ < 0 || degree_ > kMaxDegree)
            throw std::invalid_argument("KnotVector: degree must be in [0, " +
                                        std::to_string(kMaxDegree) + "]");
        const std::size_t p = static_cast<std::size_t>(degree_);
        if (knots_.size() < 2 * p + 2)
            throw std::invalid_argument("KnotVector: too few knots for degree");
        for (std::size_t k = 0; k + 1 < knots_.size(); ++k)
            if (!(knots_[k] <= knots_[k + 1]))
                throw std::invalid_argument("KnotVector: knots must be non-decreasing");
        const std::size_t m = knots_.size() - 1;
        for (std::size_t k = 0; k < p; ++k) {
            if (knots_[k] != knots_[k + 1] || knots_[m - k] != knots_[m - k - 1])
                throw std::invalid_argument("KnotVector: ends must be clamped (degree+1 copies)");
        }
        // interior spans of zero length are rejected
        for (std::size_t k = p; k < m - p; ++k)
            if (!(knots_[k] < knots_[k + 1]))
                throw std::invalid_argument("KnotVector: interior knots must be strictly increasing");
        if (!std::isfinite(knots_.front()) || !std::isfinite(knots_.back()))
            throw std::invalid_argument("KnotVector: knots must be finite");
    }

    int degree() const { return degree_; }
    const std::vector<double>& knots() const { return knots_; }

    /// Number of basis functions, n = m - p.
    std::size_t basis_count() const {
        return knots_.size() - 1 - static_cast<std::size_t>(degree_);
    }

    double domain_lo() const { return knots_[static_cast<std::size_t>(degree_)]; }
    double domain_hi() const { return knots_[knots_.size() - 1 - static_cast<std::size_t>(degree_)]; }

    /// Index i of the knot span containing u, i.e. u in [u_i, u_{i+1}),
    /// with the domain endpoint mapped into the last positive span.
    std::size_t span_of(double u) const {
        const double lo = domain_lo(), hi = domain_hi();
        if (!(u >= lo && u <= hi))
            throw std::domain_error("evaluation point " + std::to_string(u) +
                                    " outside spline domain [" + std::to_string(lo) + ", " +
                                    std::to_string(hi) + "]");
        const std::size_t p = static_cast<std::size_t>(degree_);
        const std::size_t m = knots_.size() - 1;
        if (u >= knots_[m - p]) return m - p - 1;
        auto it = std::upper_bound(knots_.begin() + static_cast<std::ptrdiff_t>(p),
                                   knots_.begin() + static_cast<std::ptrdiff_t>(m - p), u);
        return static_cast<std::size_t>(it - knots_.begin()) - 1;
    }

    bool operator==(const KnotVector& other) const = default;

private:
    std::vector<double> knots_;
    int degree_;
};

/// Clamped knot vector on [lo, hi] with n_interior equally spaced interior
/// knots; yields n_interior + degree + 1 basis functions.
inline KnotVector make_clamped_knots(double lo, double hi, std::size_t n_interior, int degree) {
    if (!(lo < hi))
        throw std::invalid_argument("make_clamped_knots: domain_lo must be below domain_hi");
    std::vector<double> knots;
    knots.reserve(2 * static_cast<std::size_t>(degree + 1) + n_interior);
    for (int k = 0; k <= degree; ++k) knots.push_back(lo);
    const double width = hi - lo;
    for (std::size_t k = 1; k <= n_interior; ++k)
        knots.push_back(lo + width * static_cast<double>(k) / static_cast<double>(n_interior + 1));
    for (int k = 0; k <= degree; ++k) knots.push_back(hi);
    return KnotVector(std::move(knots), degree);
}

/// Clamped knot vector with the given interior breakpoints.
inline KnotVector make_clamped_knots_at(double lo, double hi, std::span<const double> interior,
                                        int degree) {
    if (!(lo < hi))
        throw std::invalid_argument("make_clamped_knots_at: domain_lo must be below domain_hi");
    std::vector<double> knots;
    knots.reserve(2 * static_cast<std::size_t>(degree + 1) + interior.size());
    for (int k = 0; k <= degree; ++k) knots.push_back(lo);
    knots.insert(knots.end(), interior.begin(), interior.end());
    for (int k = 0; k <= degree; ++k) knots.push_back(hi);
    return KnotVector(std::move(knots), degree);
}

/// The degree+1 basis values that can be nonzero at u: values[j] holds
/// N_{first+j, p}(u). All other basis functions vanish there.
struct BasisWindow {
    std::size_t first = 0;
    int count = 0;
    std::array<double, kMaxDegree + 1> values{};
};

/// Cox-de Boor triangular recursion restricted to the span containing u.
inline BasisWindow basis_window(const KnotVector& kv, double u) {
    const int p = kv.degree();
    const std::size_t span = kv.span_of(u);
    const std::vector<double>& U = kv.knots();

    BasisWindow w;
    w.first = span - static_cast<std::size_t>(p);
    w.count = p + 1;
    std::array<double, kMaxDegree + 1> left{}, right{};
    w.values[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = u - U[span + 1 - static_cast<std::size_t>(j)];
        right[j] = U[span + static_cast<std::size_t>(j)] - u;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            // right[r+1] + left[j-r] is a knot difference straddling the span,
            // hence strictly positive
            const double temp = w.values[r] / (right[r + 1] + left[j - r]);
            w.values[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        w.values[j] = saved;
    }
    return w;
}

/// All n basis values N_{i,p}(u); zero outside the active window.
inline std::vector<double> eval_basis(const KnotVector& kv, double u) {
    std::vector<double> out(kv.basis_count(), 0.0);
    const BasisWindow w = basis_window(kv, u);
    for (int j = 0; j < w.count; ++j) out[w.first + static_cast<std::size_t>(j)] = w.values[j];
    return out;
}

/// Derivatives of the active basis functions at u.
/// d[k][j] = k-th derivative of N_{first+j, p}(u), k = 0..order.
struct BasisDerivs {
    std::size_t first = 0;
    std::vector<std::vector<double>> d;
};

/**
 * Values and derivatives of the degree+1 active basis functions at u,
 * computed from the knot-difference triangle. Derivative orders above the
 * degree are identically zero. Divisions whose denominator is a zero knot
 * difference contribute nothing (the 0/0 := 0 convention).
 */
inline BasisDerivs basis_derivatives(const KnotVector& kv, double u, int order) {
    if (order < 0) throw std::invalid_argument("basis_derivatives: negative order");
    const int p = kv.degree();
    const std::size_t span = kv.span_of(u);
    const std::vector<double>& U = kv.knots();

    // ndu[j][r] upper triangle: basis values per degree; lower: knot differences
    std::array<std::array<double, kMaxDegree + 1>, kMaxDegree + 1> ndu{};
    std::array<double, kMaxDegree + 1> left{}, right{};
    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = u - U[span + 1 - static_cast<std::size_t>(j)];
        right[j] = U[span + static_cast<std::size_t>(j)] - u;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu[j][r] = right[r + 1] + left[j - r];
            const double temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    BasisDerivs out;
    out.first = span - static_cast<std::size_t>(p);
    out.d.assign(static_cast<std::size_t>(order) + 1,
                 std::vector<double>(static_cast<std::size_t>(p) + 1, 0.0));
    for (int j = 0; j <= p; ++j) out.d[0][static_cast<std::size_t>(j)] = ndu[j][p];

    const int max_k = std::min(order, p);
    std::array<std::array<double, kMaxDegree + 1>, 2> a{};
    for (int r = 0; r <= p; ++r) {
        int s1 = 0, s2 = 1;
        a[0].fill(0.0);
        a[1].fill(0.0);
        a[0][0] = 1.0;
        for (int k = 1; k <= max_k; ++k) {
            double dv = 0.0;
            const int rk = r - k, pk = p - k;
            if (r >= k) {
                const double den = ndu[pk + 1][rk];
                a[s2][0] = den != 0.0 ? a[s1][0] / den : 0.0;
                dv = a[s2][0] * ndu[rk][pk];
            }
            const int j1 = rk >= -1 ? 1 : -rk;
            const int j2 = r - 1 <= pk ? k - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                const double den = ndu[pk + 1][rk + j];
                a[s2][j] = den != 0.0 ? (a[s1][j] - a[s1][j - 1]) / den : 0.0;
                dv += a[s2][j] * ndu[rk + j][pk];
            }
            if (r <= pk) {
                const double den = ndu[pk + 1][r];
                a[s2][k] = den != 0.0 ? -a[s1][k - 1] / den : 0.0;
                dv += a[s2][k] * ndu[r][pk];
            }
            out.d[static_cast<std::size_t>(k)][static_cast<std::size_t>(r)] = dv;
            std::swap(s1, s2);
        }
    }

    double factor = static_cast<double>(p);
    for (int k = 1; k <= max_k; ++k) {
        for (int j = 0; j <= p; ++j)
            out.d[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] *= factor;
        factor *= static_cast<double>(p - k);
    }
    return out;
}

/// A spline f(u) = sum_i c_i N_{i,p}(u) over a clamped basis.
class Spline {
public:
    Spline(KnotVector basis, std::vector<double> coefficients)
        : basis_(std::move(basis)), coefficients_(std::move(coefficients)) {
        if (coefficients_.size() != basis_.basis_count())
            throw std::invalid_argument(
                "Spline: coefficient count " + std::to_string(coefficients_.size()) +
                " does not match basis count " + std::to_string(basis_.basis_count()));
        for (double c : coefficients_)
            if (!std::isfinite(c)) throw std::invalid_argument("Spline: non-finite coefficient");
    }

    const KnotVector& basis() const { return basis_; }
    const std::vector<double>& coefficients() const { return coefficients_; }
    int degree() const { return basis_.degree(); }
    double domain_lo() const { return basis_.domain_lo(); }
    double domain_hi() const { return basis_.domain_hi(); }

private:
    KnotVector basis_;
    std::vector<double> coefficients_;
};

/// f(u) via the active window; exact for polynomials in the basis span.
inline double eval_spline(const Spline& s, double u) {
    const BasisWindow w = basis_window(s.basis(), u);
    const std::vector<double>& c = s.coefficients();
    double value = 0.0;
    for (int j = 0; j < w.count; ++j)
        value += c[w.first + static_cast<std::size_t>(j)] * w.values[j];
    return value;
}

/// Exact first-derivative spline: degree drops by one, knots lose one copy
/// of each clamped end, and coefficients are scaled differences
/// d_i = p (c_{i+1} - c_i) / (u_{i+p+1} - u_{i+1}).
inline Spline derivative(const Spline& s) {
    const int p = s.degree();
    if (p < 1)
        throw std::invalid_argument(
            "derivative: a degree-0 spline has no derivative in this family");
    const std::vector<double>& U = s.basis().knots();
    const std::vector<double>& c = s.coefficients();
    const std::size_t n = c.size();

    std::vector<double> dknots(U.begin() + 1, U.end() - 1);
    std::vector<double> dcoef(n - 1, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double den = U[i + static_cast<std::size_t>(p) + 1] - U[i + 1];
        dcoef[i] = den > 0.0 ? static_cast<double>(p) * (c[i + 1] - c[i]) / den : 0.0;
    }
    return Spline(KnotVector(std::move(dknots), p - 1), std::move(dcoef));
}

}  // namespace phasefit
