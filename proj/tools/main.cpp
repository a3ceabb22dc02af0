// phasefit command-line tool: fit rate curves, compute phase-plane paths and
// landmark features, render SVG plots, and run the analytic sin demo.

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "phasefit/bspline.hpp"
#include "phasefit/ingest.hpp"
#include "phasefit/phase.hpp"
#include "phasefit/render.hpp"
#include "phasefit/smooth.hpp"

namespace {

using namespace phasefit;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file '" + path + "'");
    out << content;
    if (!out) throw std::runtime_error("cannot write file '" + path + "'");
}

struct TableArgs {
    std::string input;
    std::vector<std::string> years;
    bool long_format = false;
};

struct FitArgs {
    int degree = 3;
    int penalty_order = 2;
    std::optional<int> interior;
    std::string lambda = "gcv";

    FitConfig config() const {
        FitConfig cfg;
        cfg.degree = degree;
        cfg.penalty_order = penalty_order;
        if (interior) {
            if (*interior < 0) throw std::runtime_error("--interior must be >= 0");
            cfg.n_interior = static_cast<std::size_t>(*interior);
        }
        if (lambda != "gcv") {
            double lam = 0.0;
            const char* first = lambda.data();
            const char* last = lambda.data() + lambda.size();
            auto [ptr, ec] = std::from_chars(first, last, lam);
            if (ec != std::errc() || ptr != last)
                throw std::runtime_error("invalid --lambda value '" + lambda +
                                         "' (expected a number or 'gcv')");
            cfg.lambda = lam;
        }
        return cfg;
    }
};

void add_table_options(CLI::App* cmd, TableArgs& args, std::size_t min_years,
                       std::size_t max_years) {
    cmd->add_option("--input", args.input, "rate table CSV file")->required();
    auto* year = cmd->add_option("--year", args.years, "year column to analyse (repeatable)");
    year->required()->expected(static_cast<int>(min_years), static_cast<int>(max_years));
    auto* lng = cmd->add_flag("--long", args.long_format, "input is long format (year,age,rate)");
    auto* wide = cmd->add_flag("--wide", "input is wide format (age,<year>,... ; default)");
    lng->excludes(wide);
    wide->excludes(lng);
}

void add_fit_options(CLI::App* cmd, FitArgs& args) {
    cmd->add_option("--degree", args.degree, "spline degree (default 3)");
    cmd->add_option("--penalty-order", args.penalty_order,
                    "derivative order of the roughness penalty (default 2)");
    cmd->add_option("--interior", args.interior,
                    "number of equally spaced interior knots (default: one per "
                    "interior observation)");
    cmd->add_option("--lambda", args.lambda, "smoothing parameter, or 'gcv' (default)");
}

RateTable load_table(const TableArgs& args) {
    return parse_table(read_file(args.input),
                       args.long_format ? TableFormat::long_format : TableFormat::wide_format);
}

struct YearAnalysis {
    RateCurve curve;
    FitResult fit;
    PhasePath path;
};

std::vector<YearAnalysis> analyse_years(const TableArgs& targs, const FitArgs& fargs,
                                        double step) {
    const RateTable table = load_table(targs);
    const FitConfig cfg = fargs.config();
    std::vector<YearAnalysis> out;
    for (const std::string& year : targs.years) {
        RateCurve curve = curve_for_year(table, year);
        FitResult fit = phasefit::fit(curve, cfg);
        PhasePath path = phase_path(fit.spline, step);
        out.push_back({std::move(curve), std::move(fit), std::move(path)});
    }
    return out;
}

PlotSpec labelled_spec(const TableArgs& targs, std::string title) {
    PlotSpec spec;
    spec.title = std::move(title);
    spec.series_labels = targs.years;
    return spec;
}

int run_basis(double lo, double hi, int interior, int degree, bool derivatives,
              const std::string& svg_path) {
    if (interior < 0) throw std::runtime_error("--interior must be >= 0");
    const KnotVector kv = make_clamped_knots(lo, hi, static_cast<std::size_t>(interior), degree);
    PlotSpec spec;
    spec.title = "B-spline basis, degree " + std::to_string(degree);
    write_file(svg_path, render_basis(kv, derivatives, spec));
    std::printf("basis: %zu functions over [%s, %s] -> %s\n", kv.basis_count(),
                format_shortest(lo).c_str(), format_shortest(hi).c_str(), svg_path.c_str());
    return 0;
}

int run_fit(const TableArgs& targs, const FitArgs& fargs, const std::string& svg_path,
            const std::string& csv_path) {
    const std::vector<YearAnalysis> years = analyse_years(targs, fargs, 0.05);
    if (!csv_path.empty()) {
        if (years.size() == 1) {
            write_file(csv_path, emit_fit_csv(years[0].curve, years[0].fit.spline));
        } else {
            std::string csv = "year,age,observed,fitted\n";
            for (const YearAnalysis& y : years)
                for (const Observation& o : y.curve.points())
                    csv += y.curve.label() + ',' + format_shortest(o.age) + ',' +
                           format_shortest(o.rate) + ',' +
                           format_shortest(eval_spline(y.fit.spline, o.age)) + '\n';
            write_file(csv_path, csv);
        }
    }
    if (!svg_path.empty()) {
        std::vector<FittedSeries> series;
        for (const YearAnalysis& y : years) series.push_back({y.curve, y.fit.spline});
        write_file(svg_path, render_scatter(series, labelled_spec(targs, "Observed and fitted rates")));
    }
    for (const YearAnalysis& y : years)
        std::printf("fit %s: lambda=%s gcv=%s sse=%s\n", y.curve.label().c_str(),
                    format_shortest(y.fit.lambda_used).c_str(),
                    format_shortest(y.fit.gcv_score).c_str(),
                    format_shortest(y.fit.residual_sse).c_str());
    return 0;
}

int run_phase(const TableArgs& targs, const FitArgs& fargs, double step,
              const std::string& svg_path, const std::string& csv_path) {
    const std::vector<YearAnalysis> years = analyse_years(targs, fargs, step);
    if (!csv_path.empty()) {
        if (years.size() == 1) {
            write_file(csv_path, emit_csv(years[0].path));
        } else {
            std::string csv = "year,age,velocity,acceleration\n";
            for (const YearAnalysis& y : years)
                for (const PhaseSample& s : y.path.samples)
                    csv += y.curve.label() + ',' + format_shortest(s.age) + ',' +
                           format_shortest(s.velocity) + ',' + format_shortest(s.acceleration) +
                           '\n';
            write_file(csv_path, csv);
        }
    }
    if (!svg_path.empty()) {
        std::vector<PhasePath> paths;
        for (const YearAnalysis& y : years) paths.push_back(y.path);
        write_file(svg_path, render_phase_plane(paths, labelled_spec(targs, "Phase-plane plot")));
    }
    for (const YearAnalysis& y : years)
        std::printf("phase %s: %zu samples on [%s, %s]\n", y.curve.label().c_str(),
                    y.path.samples.size(), format_shortest(y.path.age_lo()).c_str(),
                    format_shortest(y.path.age_hi()).c_str());
    return 0;
}

int run_features(const TableArgs& targs, const FitArgs& fargs, double step,
                 const std::string& csv_path) {
    const std::vector<YearAnalysis> years = analyse_years(targs, fargs, step);
    std::string csv = years.size() == 1 ? std::string() : "year,feature,age,value\n";
    for (const YearAnalysis& y : years) {
        const PhaseFeatures f = extract_features(y.path);
        if (years.size() == 1) {
            csv = emit_csv(f);
        } else {
            std::istringstream rows(emit_csv(f));
            std::string row;
            std::getline(rows, row);  // drop per-year header
            while (std::getline(rows, row)) csv += y.curve.label() + ',' + row + '\n';
        }
        std::printf("features %s: %zu crossings, %zu extrema, skew=%s, bimodal=%s\n",
                    y.curve.label().c_str(), f.zero_velocity_ages.size(),
                    f.velocity_local_extrema.size(), to_string(f.skew_direction),
                    f.bimodal ? "true" : "false");
    }
    if (!csv_path.empty()) write_file(csv_path, csv);
    return 0;
}

int run_compare(const TableArgs& targs, const FitArgs& fargs, double step,
                const std::string& csv_path) {
    const std::vector<YearAnalysis> years = analyse_years(targs, fargs, step);
    const RadiusComparison rc = compare_paths(years[0].path, years[1].path);
    std::printf("compare %s vs %s:\n", years[0].curve.label().c_str(),
                years[1].curve.label().c_str());
    std::printf("  max_radius_%s=%s\n", years[0].curve.label().c_str(),
                format_shortest(rc.max_radius_a).c_str());
    std::printf("  max_radius_%s=%s\n", years[1].curve.label().c_str(),
                format_shortest(rc.max_radius_b).c_str());
    std::printf("  ratio=%s\n", format_shortest(rc.ratio).c_str());
    if (!csv_path.empty()) {
        std::string csv = "metric,value\n";
        csv += "max_radius_" + years[0].curve.label() + ',' +
               format_shortest(rc.max_radius_a) + '\n';
        csv += "max_radius_" + years[1].curve.label() + ',' +
               format_shortest(rc.max_radius_b) + '\n';
        csv += "ratio," + format_shortest(rc.ratio) + '\n';
        write_file(csv_path, csv);
    }
    return 0;
}

int run_demo_sin(double step, const std::string& svg_path, const std::string& csv_path,
                 const std::string& features_path) {
    // the full pipeline on 101 exact samples of sin(2*pi*x), x = 0, 0.01, ..., 1:
    // interpolating fit (lambda 0, 50 interior knots), then derivatives
    std::vector<Observation> obs;
    obs.reserve(101);
    for (int i = 0; i <= 100; ++i) {
        const double x = static_cast<double>(i) / 100.0;
        obs.push_back({x, std::sin(2.0 * std::numbers::pi * x) + 2.0});
    }
    RateCurve curve("sin", obs);
    FitConfig cfg;
    cfg.n_interior = 50;
    cfg.lambda = 0.0;
    const FitResult fit = phasefit::fit(curve, cfg);
    const PhasePath path = phase_path(fit.spline, step);
    const PhaseFeatures f = extract_features(path);

    if (!csv_path.empty()) write_file(csv_path, emit_csv(path));
    if (!features_path.empty()) write_file(features_path, emit_csv(f));
    if (!svg_path.empty()) {
        PlotSpec spec;
        spec.title = "Phase plane of sin(2*pi*x) + 2";
        spec.series_labels = {"sin"};
        write_file(svg_path, render_phase_plane({path}, spec));
    }

    const double v0 = path.samples.front().velocity;
    const double a_quarter = eval_spline(path.acceleration_spline, 0.25);
    std::printf("demo-sin: v(0)=%s (2*pi=%s)\n", format_shortest(v0).c_str(),
                format_shortest(2.0 * std::numbers::pi).c_str());
    std::printf("demo-sin: a(0.25)=%s (-4*pi^2=%s)\n", format_shortest(a_quarter).c_str(),
                format_shortest(-4.0 * std::numbers::pi * std::numbers::pi).c_str());
    for (const ZeroVelocityCrossing& z : f.zero_velocity_ages)
        std::printf("demo-sin: zero-velocity %s at %s\n", to_string(z.direction),
                    format_shortest(z.age).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"B-spline rate-curve smoothing and phase-plane analysis"};
    app.require_subcommand(1);

    // basis
    auto* basis = app.add_subcommand("basis", "render a B-spline basis gallery");
    double b_lo = -1.0, b_hi = 1.0;
    int b_interior = 3, b_degree = 3;
    bool b_derivs = true;
    std::string b_svg = "basis.svg";
    basis->add_option("--lo", b_lo, "domain lower bound (default -1)");
    basis->add_option("--hi", b_hi, "domain upper bound (default 1)");
    basis->add_option("--interior", b_interior, "interior knot count (default 3)");
    basis->add_option("--degree", b_degree, "spline degree (default 3)");
    basis->add_flag("--derivatives,!--no-derivatives", b_derivs,
                    "include the first-derivative panel (default on)");
    basis->add_option("--svg", b_svg, "output SVG path (default basis.svg)");

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "fit curves and render observed vs fitted");
    TableArgs fit_targs;
    FitArgs fit_fargs;
    std::string fit_svg, fit_csv;
    add_table_options(fit_cmd, fit_targs, 1, 2);
    add_fit_options(fit_cmd, fit_fargs);
    fit_cmd->add_option("--svg", fit_svg, "scatter plot output path");
    fit_cmd->add_option("--csv", fit_csv, "observed/fitted CSV output path");

    // phase
    auto* phase_cmd = app.add_subcommand("phase", "compute and render phase-plane paths");
    TableArgs ph_targs;
    FitArgs ph_fargs;
    double ph_step = 0.05;
    std::string ph_svg, ph_csv;
    add_table_options(phase_cmd, ph_targs, 1, 2);
    add_fit_options(phase_cmd, ph_fargs);
    phase_cmd->add_option("--step", ph_step, "sampling step in years (default 0.05)");
    phase_cmd->add_option("--svg", ph_svg, "phase-plane SVG output path");
    phase_cmd->add_option("--csv", ph_csv, "phase path CSV output path");

    // features
    auto* feat_cmd = app.add_subcommand("features", "extract landmark features");
    TableArgs ft_targs;
    FitArgs ft_fargs;
    double ft_step = 0.05;
    std::string ft_csv;
    add_table_options(feat_cmd, ft_targs, 1, 2);
    add_fit_options(feat_cmd, ft_fargs);
    feat_cmd->add_option("--step", ft_step, "sampling step in years (default 0.05)");
    feat_cmd->add_option("--csv", ft_csv, "features CSV output path");

    // compare
    auto* cmp_cmd = app.add_subcommand("compare", "compare two years' cycle radii");
    TableArgs cmp_targs;
    FitArgs cmp_fargs;
    double cmp_step = 0.05;
    std::string cmp_csv;
    add_table_options(cmp_cmd, cmp_targs, 2, 2);
    add_fit_options(cmp_cmd, cmp_fargs);
    cmp_cmd->add_option("--step", cmp_step, "sampling step in years (default 0.05)");
    cmp_cmd->add_option("--csv", cmp_csv, "radius report CSV output path");

    // demo-sin
    auto* demo_cmd = app.add_subcommand("demo-sin", "analytic pipeline demo on sin(2*pi*x)");
    double demo_step = 0.05;
    std::string demo_svg, demo_csv, demo_features;
    demo_cmd->add_option("--step", demo_step, "sampling step (default 0.05)");
    demo_cmd->add_option("--svg", demo_svg, "phase-plane SVG output path");
    demo_cmd->add_option("--csv", demo_csv, "phase path CSV output path");
    demo_cmd->add_option("--features-csv", demo_features, "features CSV output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (basis->parsed()) return run_basis(b_lo, b_hi, b_interior, b_degree, b_derivs, b_svg);
        if (fit_cmd->parsed()) return run_fit(fit_targs, fit_fargs, fit_svg, fit_csv);
        if (phase_cmd->parsed()) return run_phase(ph_targs, ph_fargs, ph_step, ph_svg, ph_csv);
        if (feat_cmd->parsed()) return run_features(ft_targs, ft_fargs, ft_step, ft_csv);
        if (cmp_cmd->parsed()) return run_compare(cmp_targs, cmp_fargs, cmp_step, cmp_csv);
        if (demo_cmd->parsed())
            return run_demo_sin(demo_step, demo_svg, demo_csv, demo_features);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
