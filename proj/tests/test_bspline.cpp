#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "phasefit/bspline.hpp"

using namespace phasefit;

namespace {

// Independent oracle: the raw two-term recursion, written directly from the
// definition with no windowing or triangular reuse.
double naive_basis(const std::vector<double>& U, std::size_t i, int p, double u) {
    if (p == 0) {
        if (U[i] <= u && u < U[i + 1]) return 1.0;
        // closed right end of the overall domain
        if (u == U[i + 1] && u == U.back() && U[i] < U[i + 1]) return 1.0;
        return 0.0;
    }
    double left = 0.0, right = 0.0;
    const double dl = U[i + static_cast<std::size_t>(p)] - U[i];
    if (dl > 0.0) left = (u - U[i]) / dl * naive_basis(U, i, p - 1, u);
    const double dr = U[i + static_cast<std::size_t>(p) + 1] - U[i + 1];
    if (dr > 0.0)
        right = (U[i + static_cast<std::size_t>(p) + 1] - u) / dr * naive_basis(U, i + 1, p - 1, u);
    return left + right;
}

// Independent derivative oracle: the textbook first-derivative formula in
// terms of lower-degree basis values.
double naive_basis_derivative(const std::vector<double>& U, std::size_t i, int p, double u) {
    if (p == 0) return 0.0;
    double a = 0.0, b = 0.0;
    const double dl = U[i + static_cast<std::size_t>(p)] - U[i];
    if (dl > 0.0) a = p / dl * naive_basis(U, i, p - 1, u);
    const double dr = U[i + static_cast<std::size_t>(p) + 1] - U[i + 1];
    if (dr > 0.0) b = p / dr * naive_basis(U, i + 1, p - 1, u);
    return a - b;
}

// Deterministic pseudo-random doubles in [0, 1).
struct Lcg {
    std::uint64_t state;
    explicit Lcg(std::uint64_t seed) : state(seed) {}
    double next() {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return static_cast<double>(state >> 11) / 9007199254740992.0;
    }
};

KnotVector random_clamped(Lcg& rng, int degree) {
    const double lo = -5.0 + 10.0 * rng.next();
    const double hi = lo + 0.5 + 9.5 * rng.next();
    const std::size_t interior = static_cast<std::size_t>(rng.next() * 8.0);
    return make_clamped_knots(lo, hi, interior, degree);
}

// Polar-form coefficients representing the monomial u^k exactly on a cubic
// basis: c_i = e_k(u_{i+1}, u_{i+2}, u_{i+3}) / C(3, k).
std::vector<double> cubic_monomial_coefs(const KnotVector& kv, int k) {
    const std::vector<double>& U = kv.knots();
    std::vector<double> c(kv.basis_count());
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double a = U[i + 1], b = U[i + 2], d = U[i + 3];
        switch (k) {
            case 0: c[i] = 1.0; break;
            case 1: c[i] = (a + b + d) / 3.0; break;
            case 2: c[i] = (a * b + a * d + b * d) / 3.0; break;
            default: c[i] = a * b * d; break;
        }
    }
    return c;
}

}  // namespace

TEST_CASE("pinned value N_{0,3}(2) = 4/6 on plain knots {0,1,2,3,4}") {
    const std::vector<double> U{0.0, 1.0, 2.0, 3.0, 4.0};
    CHECK(basis_value(U, 0, 3, 2.0) == Catch::Approx(4.0 / 6.0).epsilon(1e-13));
    CHECK(naive_basis(U, 0, 3, 2.0) == Catch::Approx(4.0 / 6.0).epsilon(1e-13));
}

TEST_CASE("basis_value matches the naive recursion on plain knots") {
    const std::vector<double> U{0.0, 0.5, 1.0, 2.0, 2.5, 4.0, 5.0, 5.0, 6.0};
    for (int p = 0; p <= 3; ++p)
        for (std::size_t i = 0; i + static_cast<std::size_t>(p) + 1 < U.size(); ++i)
            for (double u = 0.0; u <= 6.0; u += 0.125)
                CHECK(basis_value(U, i, p, u) ==
                      Catch::Approx(naive_basis(U, i, p, u)).margin(1e-13));
}

TEST_CASE("clamped knot construction") {
    const KnotVector kv = make_clamped_knots(-1.0, 1.0, 3, 3);
    CHECK(kv.basis_count() == 7);
    CHECK(kv.knots().size() == 11);
    CHECK(kv.domain_lo() == -1.0);
    CHECK(kv.domain_hi() == 1.0);
    CHECK(kv.knots()[4] == Catch::Approx(-0.5));
    CHECK(kv.knots()[5] == Catch::Approx(0.0));
    CHECK(kv.knots()[6] == Catch::Approx(0.5));

    CHECK(make_clamped_knots(15.0, 49.0, 33, 3).basis_count() == 37);
    CHECK(make_clamped_knots(0.0, 1.0, 0, 0).basis_count() == 1);

    const KnotVector at = make_clamped_knots_at(0.0, 10.0, std::vector<double>{2.0, 7.5}, 2);
    CHECK(at.basis_count() == 5);
    CHECK(at.knots()[3] == 2.0);
    CHECK(at.knots()[4] == 7.5);
}

TEST_CASE("knot vector validation errors") {
    CHECK_THROWS_AS(make_clamped_knots(1.0, 1.0, 3, 3), std::invalid_argument);
    CHECK_THROWS_AS(make_clamped_knots(2.0, 1.0, 3, 3), std::invalid_argument);
    CHECK_THROWS_AS(make_clamped_knots(0.0, 1.0, 3, 11), std::invalid_argument);
    CHECK_THROWS_AS(make_clamped_knots(0.0, 1.0, 3, -1), std::invalid_argument);
    // interior knots out of order or outside the domain
    CHECK_THROWS_AS(make_clamped_knots_at(0.0, 1.0, std::vector<double>{0.7, 0.3}, 3),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_clamped_knots_at(0.0, 1.0, std::vector<double>{0.3, 0.3}, 3),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_clamped_knots_at(0.0, 1.0, std::vector<double>{1.5}, 3),
                    std::invalid_argument);
    // unclamped ends rejected by the validating constructor
    CHECK_THROWS_AS(KnotVector(std::vector<double>{0.0, 1.0, 2.0, 3.0, 4.0}, 3),
                    std::invalid_argument);
}

TEST_CASE("clamped ends evaluate to a single unit basis function") {
    const KnotVector kv = make_clamped_knots(-1.0, 1.0, 3, 3);
    const std::vector<double> at_lo = eval_basis(kv, -1.0);
    const std::vector<double> at_hi = eval_basis(kv, 1.0);
    REQUIRE(at_lo.size() == 7);
    CHECK(at_lo[0] == Catch::Approx(1.0).margin(1e-14));
    CHECK(at_hi[6] == Catch::Approx(1.0).margin(1e-14));
    for (std::size_t i = 1; i < 7; ++i) CHECK(std::abs(at_lo[i]) < 1e-14);
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(at_hi[i]) < 1e-14);
}

TEST_CASE("degree-0 basis is an indicator partition") {
    const KnotVector kv = make_clamped_knots(0.0, 2.0, 1, 0);
    CHECK(kv.basis_count() == 2);
    CHECK(eval_basis(kv, 0.5) == std::vector<double>{1.0, 0.0});
    CHECK(eval_basis(kv, 1.5) == std::vector<double>{0.0, 1.0});
    CHECK(eval_basis(kv, 1.0) == std::vector<double>{0.0, 1.0});  // half-open spans
    CHECK(eval_basis(kv, 2.0) == std::vector<double>{0.0, 1.0});  // closed right end
}

TEST_CASE("basis window matches naive recursion across random configurations") {
    Lcg rng(20240817);
    for (int trial = 0; trial < 40; ++trial) {
        const int degree = 1 + static_cast<int>(rng.next() * 5.0);
        const KnotVector kv = random_clamped(rng, degree);
        for (int k = 0; k < 25; ++k) {
            const double u =
                kv.domain_lo() + (kv.domain_hi() - kv.domain_lo()) * rng.next();
            const std::vector<double> values = eval_basis(kv, u);
            double sum = 0.0;
            for (std::size_t i = 0; i < values.size(); ++i) {
                CHECK(values[i] == Catch::Approx(naive_basis(kv.knots(), i, degree, u))
                                       .margin(1e-13));
                CHECK(values[i] >= -1e-15);
                sum += values[i];
            }
            CHECK(sum == Catch::Approx(1.0).margin(1e-12));
        }
    }
}

TEST_CASE("basis window is the local support") {
    Lcg rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const int degree = 1 + static_cast<int>(rng.next() * 4.0);
        const KnotVector kv = random_clamped(rng, degree);
        const double u = kv.domain_lo() + (kv.domain_hi() - kv.domain_lo()) * rng.next();
        const BasisWindow w = basis_window(kv, u);
        CHECK(w.count == degree + 1);
        const std::size_t count = static_cast<std::size_t>(w.count);
        CHECK(w.first + count <= kv.basis_count());
        const std::vector<double> full = eval_basis(kv, u);
        for (std::size_t i = 0; i < full.size(); ++i) {
            if (i < w.first || i >= w.first + count) CHECK(full[i] == 0.0);
        }
        // support in knot terms: nonzero only where u is inside [U_i, U_{i+p+1}]
        for (std::size_t i = 0; i < full.size(); ++i) {
            const auto& U = kv.knots();
            if (u < U[i] || u > U[i + static_cast<std::size_t>(degree) + 1])
                CHECK(full[i] == 0.0);
        }
    }
}

TEST_CASE("basis_derivatives order 0 and 1 match naive oracles") {
    Lcg rng(909);
    for (int trial = 0; trial < 25; ++trial) {
        const int degree = 1 + static_cast<int>(rng.next() * 5.0);
        const KnotVector kv = random_clamped(rng, degree);
        const double u =
            kv.domain_lo() + (kv.domain_hi() - kv.domain_lo()) * (0.01 + 0.98 * rng.next());
        const BasisDerivs d = basis_derivatives(kv, u, 1);
        for (std::size_t j = 0; j < d.d[0].size(); ++j) {
            const std::size_t i = d.first + j;
            CHECK(d.d[0][j] ==
                  Catch::Approx(naive_basis(kv.knots(), i, degree, u)).margin(1e-12));
            CHECK(d.d[1][j] ==
                  Catch::Approx(naive_basis_derivative(kv.knots(), i, degree, u))
                      .margin(1e-10));
        }
    }
}

TEST_CASE("derivatives beyond the degree vanish") {
    const KnotVector kv = make_clamped_knots(0.0, 1.0, 2, 3);
    const BasisDerivs d = basis_derivatives(kv, 0.4, 5);
    REQUIRE(d.d.size() == 6);
    for (double v : d.d[4]) CHECK(v == 0.0);
    for (double v : d.d[5]) CHECK(v == 0.0);
}

TEST_CASE("cubic spline reproduces cubic polynomials via polar forms") {
    Lcg rng(4242);
    for (int trial = 0; trial < 10; ++trial) {
        const KnotVector kv = random_clamped(rng, 3);
        const double a0 = rng.next() - 0.5, a1 = rng.next() - 0.5, a2 = rng.next() - 0.5,
                     a3 = rng.next() - 0.5;
        std::vector<double> c(kv.basis_count(), 0.0);
        for (int k = 0; k <= 3; ++k) {
            const std::vector<double> ck = cubic_monomial_coefs(kv, k);
            const double ak = k == 0 ? a0 : k == 1 ? a1 : k == 2 ? a2 : a3;
            for (std::size_t i = 0; i < c.size(); ++i) c[i] += ak * ck[i];
        }
        const Spline s(kv, c);
        const double lo = kv.domain_lo(), hi = kv.domain_hi();
        for (int k = 0; k <= 50; ++k) {
            // lo + (hi-lo) can land one ulp past hi, so clamp the sample
            const double u = std::min(hi, lo + (hi - lo) * k / 50.0);
            const double want = a0 + u * (a1 + u * (a2 + u * a3));
            CHECK(eval_spline(s, u) == Catch::Approx(want).margin(1e-10));
        }
    }
}

TEST_CASE("derivative spline of u^3 is 3u^2, then 6u, then 6") {
    const KnotVector kv = make_clamped_knots(0.0, 2.0, 4, 3);
    const Spline s(kv, cubic_monomial_coefs(kv, 3));
    const Spline d1 = derivative(s);
    const Spline d2 = derivative(d1);
    const Spline d3 = derivative(d2);
    CHECK(d1.basis().degree() == 2);
    CHECK(d2.basis().degree() == 1);
    CHECK(d3.basis().degree() == 0);
    for (int k = 0; k <= 40; ++k) {
        const double u = 2.0 * k / 40.0;
        CHECK(eval_spline(d1, u) == Catch::Approx(3.0 * u * u).margin(1e-9));
        CHECK(eval_spline(d2, u) == Catch::Approx(6.0 * u).margin(1e-8));
        CHECK(eval_spline(d3, u) == Catch::Approx(6.0).margin(1e-8));
    }
    CHECK_THROWS_AS(derivative(d3), std::invalid_argument);
}

TEST_CASE("derivative spline matches central finite differences") {
    Lcg rng(5150);
    for (int trial = 0; trial < 12; ++trial) {
        const KnotVector kv = random_clamped(rng, 3);
        std::vector<double> c(kv.basis_count());
        for (double& x : c) x = 2.0 * rng.next() - 1.0;
        const Spline s(kv, c);
        const Spline ds = derivative(s);
        const double lo = kv.domain_lo(), hi = kv.domain_hi();
        const double h = 1e-5 * (hi - lo);

        double dmax = 0.0;
        for (int k = 0; k <= 100; ++k)
            dmax = std::max(dmax, std::abs(eval_spline(ds, lo + (hi - lo) * k / 100.0)));

        for (int k = 0; k < 60; ++k) {
            const double u = lo + h + (hi - lo - 2.0 * h) * rng.next();
            const double fd = (eval_spline(s, u + h) - eval_spline(s, u - h)) / (2.0 * h);
            const double dv = eval_spline(ds, u);
            const double denom = std::max(std::abs(dv), 0.01 * dmax);
            if (denom == 0.0) continue;  // identically zero spline
            CHECK(std::abs(fd - dv) / denom < 1e-6);
        }
    }
}

TEST_CASE("cubic splines are C2 at interior knots") {
    Lcg rng(31337);
    for (int trial = 0; trial < 8; ++trial) {
        const KnotVector kv = random_clamped(rng, 3);
        std::vector<double> c(kv.basis_count());
        for (double& x : c) x = 2.0 * rng.next() - 1.0;
        const Spline s2 = derivative(derivative(Spline(kv, c)));
        const double span = kv.domain_hi() - kv.domain_lo();
        const double delta = 1e-10 * span;
        const std::size_t p = 3;
        for (std::size_t k = p + 1; k + p + 1 < kv.knots().size(); ++k) {
            const double knot = kv.knots()[k];
            const double jump =
                std::abs(eval_spline(s2, knot + delta) - eval_spline(s2, knot - delta));
            CHECK(jump < 1e-7);
        }
    }
}

TEST_CASE("spline construction and evaluation errors") {
    const KnotVector kv = make_clamped_knots(0.0, 1.0, 1, 3);
    CHECK_THROWS_AS(Spline(kv, std::vector<double>(4, 0.0)), std::invalid_argument);
    CHECK_THROWS_AS(Spline(kv, std::vector<double>{0, 0, 0, 0, 1.0 / 0.0}),
                    std::invalid_argument);
    const Spline s(kv, std::vector<double>(5, 1.0));
    CHECK_THROWS_AS(eval_spline(s, -0.1), std::domain_error);
    CHECK_THROWS_AS(eval_spline(s, 1.1), std::domain_error);
    CHECK_THROWS_AS(eval_basis(kv, 2.0), std::domain_error);
    CHECK_THROWS_AS(basis_derivatives(kv, 0.5, -1), std::invalid_argument);
}

TEST_CASE("evaluation is exact at the closed right end") {
    Lcg rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const int degree = 1 + static_cast<int>(rng.next() * 4.0);
        const KnotVector kv = random_clamped(rng, degree);
        std::vector<double> c(kv.basis_count());
        for (double& x : c) x = rng.next();
        const Spline s(kv, c);
        CHECK(eval_spline(s, kv.domain_hi()) == Catch::Approx(c.back()).margin(1e-13));
        CHECK(eval_spline(s, kv.domain_lo()) == Catch::Approx(c.front()).margin(1e-13));
    }
}
