#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "phasefit/smooth.hpp"

using namespace phasefit;

namespace {

struct Lcg {
    std::uint64_t state;
    explicit Lcg(std::uint64_t seed) : state(seed) {}
    double next() {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return static_cast<double>(state >> 11) / 9007199254740992.0;
    }
};

RateCurve sampled(const std::string& label, double lo, double hi, std::size_t n,
                  double (*f)(double)) {
    std::vector<Observation> pts;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        pts.push_back({x, f(x)});
    }
    return RateCurve(label, std::move(pts));
}

// closed-form ordinary least squares line through (x_i, y_i)
std::pair<double, double> ols_line(const std::vector<Observation>& pts) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(pts.size());
    for (const Observation& o : pts) {
        sx += o.age;
        sy += o.rate;
        sxx += o.age * o.age;
        sxy += o.age * o.rate;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    return {intercept, slope};
}

double quad_form(const Matrix& r, const std::vector<double>& c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < r.rows(); ++i)
        for (std::size_t j = 0; j < r.cols(); ++j) acc += c[i] * r(i, j) * c[j];
    return acc;
}

}  // namespace

TEST_CASE("design matrix rows are local convex weights") {
    const KnotVector kv = make_clamped_knots(15.0, 49.0, 5, 3);
    std::vector<double> ages;
    for (int a = 15; a <= 49; ++a) ages.push_back(static_cast<double>(a));
    const Matrix m = design_matrix(kv, ages);
    REQUIRE(m.rows() == ages.size());
    REQUIRE(m.cols() == kv.basis_count());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double sum = 0.0;
        std::size_t nonzeros = 0;
        for (std::size_t c = 0; c < m.cols(); ++c) {
            CHECK(m(r, c) >= 0.0);
            sum += m(r, c);
            if (m(r, c) != 0.0) ++nonzeros;
        }
        CHECK(sum == Catch::Approx(1.0).margin(1e-12));
        CHECK(nonzeros <= 4);
    }
    // the clamped left end is interpolated by the first basis function alone
    CHECK(m(0, 0) == Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("roughness matrix is symmetric and annihilates low-degree polynomials") {
    const KnotVector kv = make_clamped_knots(0.0, 3.0, 4, 3);
    const Matrix r = roughness_matrix(kv, 2);
    REQUIRE(r.rows() == kv.basis_count());
    REQUIRE(r.cols() == kv.basis_count());
    for (std::size_t i = 0; i < r.rows(); ++i)
        for (std::size_t j = 0; j < r.cols(); ++j)
            CHECK(r(i, j) == Catch::Approx(r(j, i)).margin(1e-14));

    // a line has zero second-derivative energy; its cubic B-spline
    // coefficients are the knot averages (polar form of u)
    std::vector<double> line(kv.basis_count());
    for (std::size_t i = 0; i < line.size(); ++i) {
        const auto& U = kv.knots();
        line[i] = 2.0 + 0.7 * (U[i + 1] + U[i + 2] + U[i + 3]) / 3.0;
    }
    CHECK(std::abs(quad_form(r, line)) < 1e-10);

    // positive semidefinite on random vectors
    Lcg rng(99);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> v(kv.basis_count());
        for (double& x : v) x = 2.0 * rng.next() - 1.0;
        CHECK(quad_form(r, v) >= -1e-12);
    }
}

TEST_CASE("roughness of u^2 under q=2 equals 4 times the span") {
    // f'' = 2, so the integral of (f'')^2 over [lo, hi] is 4 (hi - lo)
    const KnotVector kv = make_clamped_knots(1.0, 4.0, 3, 3);
    const Matrix r = roughness_matrix(kv, 2);
    std::vector<double> c(kv.basis_count());
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto& U = kv.knots();
        c[i] = (U[i + 1] * U[i + 2] + U[i + 1] * U[i + 3] + U[i + 2] * U[i + 3]) / 3.0;
    }
    CHECK(quad_form(r, c) == Catch::Approx(12.0).margin(1e-8));

    // first-derivative penalty on a line with slope s: s^2 (hi - lo)
    const Matrix r1 = roughness_matrix(kv, 1);
    std::vector<double> line(kv.basis_count());
    for (std::size_t i = 0; i < line.size(); ++i) {
        const auto& U = kv.knots();
        line[i] = 0.5 * (U[i + 1] + U[i + 2] + U[i + 3]) / 3.0;
    }
    CHECK(quad_form(r1, line) == Catch::Approx(0.25 * 3.0).margin(1e-8));
}

TEST_CASE("penalty order above the degree is rejected") {
    const KnotVector kv = make_clamped_knots(0.0, 1.0, 2, 2);
    CHECK_THROWS_AS(roughness_matrix(kv, 3), std::invalid_argument);
    CHECK_NOTHROW(roughness_matrix(kv, 2));
}

TEST_CASE("unpenalized fit reproduces an exact cubic") {
    auto cubic = [](double x) { return 0.3 + 0.2 * x - 0.05 * x * x + 0.01 * x * x * x; };
    std::vector<Observation> pts;
    for (int a = 0; a <= 30; ++a) {
        const double x = static_cast<double>(a) / 3.0;
        pts.push_back({x, cubic(x)});
    }
    FitConfig cfg;
    cfg.n_interior = 4;
    cfg.lambda = 0.0;
    const FitResult res = fit(RateCurve("cubic", pts), cfg);
    CHECK(res.residual_sse < 1e-18);
    CHECK(res.lambda_used == 0.0);
    for (const Observation& o : pts)
        CHECK(eval_spline(res.spline, o.age) == Catch::Approx(o.rate).margin(1e-9));
}

TEST_CASE("huge lambda flattens the fit to the least-squares line") {
    // with q = 2 the penalty null space is degree < 2, so lambda -> infinity
    // drives the fit to the OLS line through the data
    auto wavy = [](double x) { return 1.0 + 0.05 * x + 0.4 * std::sin(1.7 * x); };
    const RateCurve curve = sampled("wavy", 0.0, 10.0, 60, wavy);
    FitConfig cfg;
    cfg.n_interior = 8;
    cfg.lambda = 1e9;
    const FitResult res = fit(curve, cfg);
    const auto [b0, b1] = ols_line(curve.points());
    for (const Observation& o : curve.points())
        CHECK(eval_spline(res.spline, o.age) ==
              Catch::Approx(b0 + b1 * o.age).margin(1e-4));
}

TEST_CASE("fitted values are invariant under age shifts at fixed lambda") {
    auto f = [](double x) { return 2.0 + std::cos(0.8 * x); };
    const RateCurve base = sampled("base", 0.0, 8.0, 40, f);
    std::vector<Observation> shifted_pts;
    for (const Observation& o : base.points()) shifted_pts.push_back({o.age + 100.0, o.rate});
    const RateCurve shifted("shifted", shifted_pts);

    FitConfig cfg;
    cfg.n_interior = 6;
    cfg.lambda = 0.37;
    const FitResult a = fit(base, cfg);
    const FitResult b = fit(shifted, cfg);
    CHECK(a.residual_sse == Catch::Approx(b.residual_sse).margin(1e-9));
    for (int k = 0; k <= 80; ++k) {
        const double x = 8.0 * k / 80.0;
        CHECK(eval_spline(a.spline, x) ==
              Catch::Approx(eval_spline(b.spline, std::min(x + 100.0, 108.0))).margin(1e-9));
    }
}

TEST_CASE("residual SSE grows monotonically with lambda") {
    auto f = [](double x) { return 1.0 + 0.3 * std::sin(2.1 * x) + 0.1 * x; };
    const RateCurve curve = sampled("mono", 0.0, 6.0, 50, f);
    double prev = -1.0;
    for (double lambda : {0.0, 1e-4, 1e-2, 1.0, 1e2, 1e4, 1e6}) {
        FitConfig cfg;
        cfg.n_interior = 10;
        cfg.lambda = lambda;
        const FitResult res = fit(curve, cfg);
        CHECK(res.residual_sse >= prev - 1e-12);
        prev = res.residual_sse;
    }
}

TEST_CASE("hat-matrix trace interpolates between basis count and penalty null space") {
    auto f = [](double x) { return 1.0 + 0.3 * std::sin(2.1 * x) + 0.1 * x; };
    const RateCurve curve = sampled("trace", 0.0, 6.0, 50, f);
    FitConfig cfg;
    cfg.n_interior = 10;
    const KnotVector kv = knots_for(curve, cfg);
    detail::SymBand btb;
    std::vector<double> bty;
    detail::assemble_normal(kv, curve.points(), btb, bty);
    const detail::SymBand rough = detail::assemble_roughness(kv, cfg.penalty_order);

    // recover tr H from the GCV identity: gcv = n sse / (n - tr)^2
    auto trace_of = [&](double lambda) {
        const detail::GcvEvaluation ev =
            detail::evaluate_lambda(btb, rough, bty, curve.points(), kv, lambda);
        const double n = static_cast<double>(curve.size());
        return n - std::sqrt(n * ev.sse / ev.gcv);
    };

    CHECK(trace_of(0.0) == Catch::Approx(static_cast<double>(kv.basis_count())).margin(1e-6));
    CHECK(trace_of(1e9) == Catch::Approx(2.0).margin(0.01));  // q = 2 null space
    CHECK(trace_of(1e-3) > trace_of(1.0));
    CHECK(trace_of(1.0) > trace_of(1e3));
}

TEST_CASE("unpenalized residuals are orthogonal to the basis columns") {
    auto f = [](double x) { return 0.5 + 0.2 * std::sin(3.0 * x); };
    const RateCurve curve = sampled("orth", 0.0, 5.0, 30, f);
    FitConfig cfg;
    cfg.n_interior = 6;
    cfg.lambda = 0.0;
    const FitResult res = fit(curve, cfg);
    std::vector<double> ages;
    for (const Observation& o : curve.points()) ages.push_back(o.age);
    const Matrix b = design_matrix(res.spline.basis(), ages);
    for (std::size_t c = 0; c < b.cols(); ++c) {
        double dot = 0.0;
        for (std::size_t r = 0; r < b.rows(); ++r) {
            const Observation& o = curve.points()[r];
            dot += b(r, c) * (o.rate - eval_spline(res.spline, o.age));
        }
        CHECK(std::abs(dot) < 1e-8);
    }
}

TEST_CASE("rank-deficient basis throws at lambda zero and solves with penalty") {
    // one interior knot per observation leaves more coefficients than data
    std::vector<Observation> pts;
    for (int a = 0; a <= 34; ++a) pts.push_back({static_cast<double>(a), 1.0 + 0.01 * a});
    const RateCurve curve("deficient", pts);
    FitConfig cfg;
    cfg.n_interior = 35;
    cfg.lambda = 0.0;
    CHECK_THROWS_AS(fit(curve, cfg), std::runtime_error);
    cfg.lambda = 1e-3;
    CHECK_NOTHROW(fit(curve, cfg));
}

TEST_CASE("GCV picks a lambda inside the published grid") {
    auto f = [](double x) { return 2.0 + std::sin(x); };
    const RateCurve curve = sampled("gcv", 0.0, 6.0, 40, f);
    FitConfig cfg;
    cfg.n_interior = 12;
    const FitResult res = fit(curve, cfg);
    CHECK(res.lambda_used >= kGcvLambdaMin);
    CHECK(res.lambda_used <= kGcvLambdaMax);
    CHECK(std::isfinite(res.gcv_score));

    // GCV score of the winner is no worse than either grid endpoint
    FitConfig lo_cfg = cfg;
    lo_cfg.lambda = kGcvLambdaMin;
    FitConfig hi_cfg = cfg;
    hi_cfg.lambda = kGcvLambdaMax;
    CHECK(res.gcv_score <= fit(curve, lo_cfg).gcv_score + 1e-12);
    CHECK(res.gcv_score <= fit(curve, hi_cfg).gcv_score + 1e-12);
}

TEST_CASE("GCV denoises a known signal") {
    auto truth = [](double x) { return 2.0 + std::sin(1.5 * x); };
    Lcg rng(123456789);
    std::vector<Observation> pts;
    for (int i = 0; i <= 60; ++i) {
        const double x = 6.0 * i / 60.0;
        const double noise = 0.08 * (2.0 * rng.next() - 1.0);
        pts.push_back({x, truth(x) + noise});
    }
    const RateCurve curve("noisy", pts);
    const FitResult smooth = fit(curve, FitConfig{});  // defaults: GCV

    FitConfig rough_cfg;
    rough_cfg.lambda = 1e-8;
    const FitResult rough = fit(curve, rough_cfg);

    auto err_vs_truth = [&](const FitResult& r) {
        double acc = 0.0;
        for (const Observation& o : pts) {
            const double e = eval_spline(r.spline, o.age) - truth(o.age);
            acc += e * e;
        }
        return acc;
    };
    CHECK(err_vs_truth(smooth) < err_vs_truth(rough));
}

TEST_CASE("default knot placement uses interior observation ages") {
    std::vector<Observation> pts;
    for (int a = 15; a <= 49; ++a) pts.push_back({static_cast<double>(a), 0.1});
    const RateCurve curve("ages", pts);
    const KnotVector kv = knots_for(curve, FitConfig{});
    CHECK(kv.basis_count() == 37);  // 33 interior knots + degree 3 + 1
    CHECK(kv.domain_lo() == 15.0);
    CHECK(kv.domain_hi() == 49.0);
    CHECK(kv.knots()[4] == 16.0);

    FitConfig explicit_cfg;
    explicit_cfg.n_interior = 5;
    const KnotVector kv2 = knots_for(curve, explicit_cfg);
    CHECK(kv2.basis_count() == 9);
}

TEST_CASE("curve and config validation errors") {
    CHECK_THROWS_AS(RateCurve("x", {}), std::invalid_argument);
    CHECK_THROWS_AS(RateCurve("x", {{0.0, -0.1}}), std::invalid_argument);
    CHECK_THROWS_AS(RateCurve("x", {{0.0, 1.0}, {0.0, 2.0}}), std::invalid_argument);
    CHECK_THROWS_AS(RateCurve("x", {{0.0, 1.0 / 0.0}}), std::invalid_argument);

    std::vector<Observation> pts{{0.0, 1.0}, {1.0, 2.0}, {2.0, 1.5}, {3.0, 1.0}, {4.0, 0.5}};
    const RateCurve ok("ok", pts);
    FitConfig bad;
    bad.degree = 11;
    CHECK_THROWS_AS(fit(ok, bad), std::invalid_argument);
    bad = FitConfig{};
    bad.penalty_order = 4;
    CHECK_THROWS_AS(fit(ok, bad), std::invalid_argument);
    bad = FitConfig{};
    bad.lambda = -1.0;
    CHECK_THROWS_AS(fit(ok, bad), std::invalid_argument);
    CHECK_THROWS_AS(fit(RateCurve("tiny", {{0.0, 1.0}, {1.0, 2.0}}), FitConfig{}),
                    std::invalid_argument);
}
