#pragma once

// SVG rendering of phase-plane, scatter, and basis-function plots, plus CSV
// emission for every numeric artifact. All output is deterministic text:
// identical inputs give byte-identical documents.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "phasefit/bspline.hpp"
#include "phasefit/ingest.hpp"
#include "phasefit/phase.hpp"
#include "phasefit/smooth.hpp"

namespace phasefit {

/// Plot geometry and labelling. Series content is passed to the render
/// functions directly; colours and legend labels here are matched to series
/// by position, with greys echoing the two-year comparison convention
/// (first series dark, second light).
struct PlotSpec {
    double width = 720.0;
    double height = 540.0;
    double margin = 64.0;
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<std::string> series_labels;
    std::vector<std::string> series_colors;
    bool annotate_integer_ages = true;

    std::string color(std::size_t series) const {
        static constexpr const char* kDefault[] = {"#3b3b3b", "#b9b9b9"};
        if (series < series_colors.size()) return series_colors[series];
        return kDefault[series % 2];
    }
};

/// Affine data-to-pixel map; `inverse` recovers data values from emitted
/// coordinates (used by the coordinate-fidelity tests).
struct LinearMap {
    double in_lo = 0.0;
    double in_hi = 1.0;
    double out_lo = 0.0;
    double out_hi = 1.0;

    double operator()(double v) const {
        return out_lo + (v - in_lo) * (out_hi - out_lo) / (in_hi - in_lo);
    }
    double inverse(double p) const {
        return in_lo + (p - out_lo) * (in_hi - in_lo) / (out_hi - out_lo);
    }
};

/// x/y maps of one plot panel.
struct PlotFrame {
    LinearMap x;
    LinearMap y;
};

namespace detail {

inline void check_spec(const PlotSpec& spec) {
    if (!(spec.width > 0.0) || !(spec.height > 0.0) || !(spec.margin >= 0.0))
        throw std::invalid_argument("PlotSpec: dimensions must be positive");
    if (2.0 * spec.margin >= spec.width || 2.0 * spec.margin >= spec.height)
        throw std::invalid_argument("PlotSpec: margins leave no plotting area");
}

struct Range {
    double lo = 0.0;
    double hi = 0.0;

    void expand(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
};

/// Pad a data range by 5% each side; a collapsed range widens to unit size
/// so maps stay invertible.
inline Range padded(double lo, double hi, bool include_zero) {
    if (include_zero) {
        lo = std::min(lo, 0.0);
        hi = std::max(hi, 0.0);
    }
    double span = hi - lo;
    if (span <= 0.0) {
        lo -= 0.5;
        hi += 0.5;
        span = hi - lo;
    }
    return {lo - 0.05 * span, hi + 0.05 * span};
}

}  // namespace detail

/// Fixed-point decimal text, negative zero normalized to zero.
inline std::string format_fixed(double v, int precision) {
    char buf[512];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
    if (ec != std::errc()) throw std::runtime_error("format_fixed: value out of range");
    std::string s(buf, ptr);
    if (s.front() == '-' && s.find_first_not_of("0.", 1) == std::string::npos) s.erase(0, 1);
    return s;
}

/// Shortest decimal text that parses back to exactly the same double.
inline std::string format_shortest(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw std::runtime_error("format_shortest: value out of range");
    std::string s(buf, ptr);
    if (s.front() == '-' && s.find_first_not_of("0.", 1) == std::string::npos) s.erase(0, 1);
    return s;
}

namespace detail {

inline std::string escape_text(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        if (c == '&')
            out += "&amp;";
        else if (c == '<')
            out += "&lt;";
        else if (c == '>')
            out += "&gt;";
        else
            out += c;
    }
    return out;
}

/// Accumulates SVG elements with a fixed attribute order and fixed two-decimal
/// coordinates, which is what makes the documents byte-reproducible.
class SvgWriter {
public:
    SvgWriter(double width, double height) {
        out_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_fixed(width, 0) +
                "\" height=\"" + format_fixed(height, 0) + "\" viewBox=\"0 0 " +
                format_fixed(width, 0) + " " + format_fixed(height, 0) + "\">\n";
        out_ += "<rect x=\"0\" y=\"0\" width=\"" + format_fixed(width, 0) + "\" height=\"" +
                format_fixed(height, 0) + "\" fill=\"#ffffff\"/>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double stroke_width, const std::string& dash = {}) {
        out_ += "<line x1=\"" + px(x1) + "\" y1=\"" + px(y1) + "\" x2=\"" + px(x2) + "\" y2=\"" +
                px(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
                format_fixed(stroke_width, 1) + "\"";
        if (!dash.empty()) out_ += " stroke-dasharray=\"" + dash + "\"";
        out_ += "/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& stroke) {
        out_ += "<rect x=\"" + px(x) + "\" y=\"" + px(y) + "\" width=\"" + px(w) +
                "\" height=\"" + px(h) + "\" fill=\"none\" stroke=\"" + stroke +
                "\" stroke-width=\"1.0\"/>\n";
    }

    void polyline(const std::string& points, const std::string& stroke, double stroke_width) {
        out_ += "<polyline points=\"" + points + "\" fill=\"none\" stroke=\"" + stroke +
                "\" stroke-width=\"" + format_fixed(stroke_width, 1) +
                "\" stroke-linejoin=\"round\"/>\n";
    }

    void path(const std::string& d, const std::string& stroke, double stroke_width,
              const std::string& dash = {}) {
        out_ += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" +
                format_fixed(stroke_width, 1) + "\"";
        if (!dash.empty()) out_ += " stroke-dasharray=\"" + dash + "\"";
        out_ += "/>\n";
    }

    void circle(double cx, double cy, double r, const std::string& fill) {
        out_ += "<circle cx=\"" + px(cx) + "\" cy=\"" + px(cy) + "\" r=\"" + format_fixed(r, 1) +
                "\" fill=\"" + fill + "\"/>\n";
    }

    void text(double x, double y, const std::string& content, const std::string& anchor,
              double size, const std::string& fill, const std::string& transform = {}) {
        out_ += "<text x=\"" + px(x) + "\" y=\"" + px(y) + "\" font-family=\"sans-serif\""
                " font-size=\"" +
                format_fixed(size, 0) + "\" text-anchor=\"" + anchor + "\" fill=\"" + fill + "\"";
        if (!transform.empty()) out_ += " transform=\"" + transform + "\"";
        out_ += ">" + escape_text(content) + "</text>\n";
    }

    std::string finish() {
        out_ += "</svg>\n";
        return std::move(out_);
    }

    static std::string px(double v) { return format_fixed(v, 2); }

private:
    std::string out_;
};

inline std::string polyline_points(const std::vector<std::pair<double, double>>& pts,
                                   const LinearMap& x, const LinearMap& y) {
    std::string s;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i) s += ' ';
        s += SvgWriter::px(x(pts[i].first)) + ',' + SvgWriter::px(y(pts[i].second));
    }
    return s;
}

/// Frame, five labelled ticks per axis, and axis/title text common to all
/// plots. Tick label precision adapts to the data scale.
inline void draw_chrome(SvgWriter& svg, const PlotSpec& spec, const PlotFrame& frame,
                        const std::string& default_x, const std::string& default_y) {
    const double x0 = frame.x.out_lo, x1 = frame.x.out_hi;
    const double y0 = frame.y.out_lo, y1 = frame.y.out_hi;  // y0 is the bottom edge
    svg.rect(x1 > x0 ? x0 : x1, y1 < y0 ? y1 : y0, std::abs(x1 - x0), std::abs(y0 - y1),
             "#cccccc");

    auto tick_precision = [](double lo, double hi) {
        const double span = std::abs(hi - lo);
        if (span >= 100.0) return 0;
        if (span >= 1.0) return 2;
        return 4;
    };
    const int xprec = tick_precision(frame.x.in_lo, frame.x.in_hi);
    const int yprec = tick_precision(frame.y.in_lo, frame.y.in_hi);

    for (int i = 0; i <= 4; ++i) {
        const double fx = frame.x.in_lo + (frame.x.in_hi - frame.x.in_lo) * i / 4.0;
        const double fy = frame.y.in_lo + (frame.y.in_hi - frame.y.in_lo) * i / 4.0;
        const double pxx = frame.x(fx), pyy = frame.y(fy);
        svg.line(pxx, y0, pxx, y0 + 4.0, "#888888", 1.0);
        svg.text(pxx, y0 + 16.0, format_fixed(fx, xprec), "middle", 10.0, "#444444");
        svg.line(x0 - 4.0, pyy, x0, pyy, "#888888", 1.0);
        svg.text(x0 - 7.0, pyy + 3.0, format_fixed(fy, yprec), "end", 10.0, "#444444");
    }

    const std::string xl = spec.x_label.empty() ? default_x : spec.x_label;
    const std::string yl = spec.y_label.empty() ? default_y : spec.y_label;
    svg.text(0.5 * (x0 + x1), y0 + 34.0, xl, "middle", 12.0, "#222222");
    svg.text(x0 - 44.0, 0.5 * (y0 + y1), yl, "middle", 12.0, "#222222",
             "rotate(-90 " + SvgWriter::px(x0 - 44.0) + " " + SvgWriter::px(0.5 * (y0 + y1)) +
                 ")");
    if (!spec.title.empty())
        svg.text(0.5 * (x0 + x1), (y1 < y0 ? y1 : y0) - 10.0, spec.title, "middle", 14.0,
                 "#111111");
}

inline void draw_legend(SvgWriter& svg, const PlotSpec& spec, const PlotFrame& frame,
                        std::size_t series_count) {
    for (std::size_t i = 0; i < series_count && i < spec.series_labels.size(); ++i) {
        const double y = (frame.y.out_hi < frame.y.out_lo ? frame.y.out_hi : frame.y.out_lo) +
                         14.0 + 16.0 * static_cast<double>(i);
        const double x = frame.x.out_hi - 8.0;
        svg.circle(x - 64.0, y - 3.5, 3.0, spec.color(i));
        svg.text(x - 56.0, y, spec.series_labels[i], "start", 11.0, "#333333");
    }
}

}  // namespace detail

/// Data-to-pixel maps a phase-plane plot uses: velocity on x, acceleration on
/// y, both ranges padded and forced to include zero so the zero axes show.
inline PlotFrame phase_frame(const std::vector<PhasePath>& paths, const PlotSpec& spec) {
    detail::check_spec(spec);
    if (paths.empty() || paths.size() > 2)
        throw std::invalid_argument("render_phase_plane: need one or two paths");
    detail::Range v{0.0, 0.0}, a{0.0, 0.0};  // padded() forces zero in anyway
    for (const PhasePath& p : paths) {
        if (p.samples.size() < 2)
            throw std::invalid_argument(
                "render_phase_plane: degenerate path (fewer than 2 samples)");
        for (const PhaseSample& s : p.samples) {
            v.expand(s.velocity);
            a.expand(s.acceleration);
        }
    }
    const detail::Range vr = detail::padded(v.lo, v.hi, true);
    const detail::Range ar = detail::padded(a.lo, a.hi, true);
    return {{vr.lo, vr.hi, spec.margin, spec.width - spec.margin},
            {ar.lo, ar.hi, spec.height - spec.margin, spec.margin}};
}

/// Phase-plane plot: one or two sampled cycles with zero axes and integer-age
/// annotations read off the exact derivative splines.
inline std::string render_phase_plane(const std::vector<PhasePath>& paths, const PlotSpec& spec) {
    const PlotFrame frame = phase_frame(paths, spec);
    detail::SvgWriter svg(spec.width, spec.height);
    detail::draw_chrome(svg, spec, frame, "velocity", "acceleration");

    // zero axes
    svg.line(frame.x.out_lo, frame.y(0.0), frame.x.out_hi, frame.y(0.0), "#999999", 1.0, "4,3");
    svg.line(frame.x(0.0), frame.y.out_lo, frame.x(0.0), frame.y.out_hi, "#999999", 1.0, "4,3");

    for (std::size_t i = 0; i < paths.size(); ++i) {
        const PhasePath& p = paths[i];
        std::vector<std::pair<double, double>> pts;
        pts.reserve(p.samples.size());
        for (const PhaseSample& s : p.samples) pts.emplace_back(s.velocity, s.acceleration);
        svg.polyline(detail::polyline_points(pts, frame.x, frame.y), spec.color(i), 1.6);
    }

    if (spec.annotate_integer_ages) {
        for (std::size_t i = 0; i < paths.size(); ++i) {
            const PhasePath& p = paths[i];
            const double lo = p.age_lo(), hi = p.age_hi();
            for (double age = std::ceil(lo); age <= hi + 1e-12; age += 1.0) {
                const double vv = eval_spline(p.velocity_spline, std::min(age, hi));
                const double aa = eval_spline(p.acceleration_spline, std::min(age, hi));
                svg.circle(frame.x(vv), frame.y(aa), 2.0, spec.color(i));
                svg.text(frame.x(vv) + 4.0, frame.y(aa) - 4.0, format_fixed(age, 0), "start", 9.0,
                         spec.color(i));
            }
        }
    }

    detail::draw_legend(svg, spec, frame, paths.size());
    return svg.finish();
}

/// One observed curve and the spline fitted to it.
struct FittedSeries {
    RateCurve curve;
    Spline fit;
};

/// Data-to-pixel maps for a scatter plot: age on x, rate on y (zero-based).
inline PlotFrame scatter_frame(const std::vector<FittedSeries>& series, const PlotSpec& spec) {
    detail::check_spec(spec);
    if (series.empty() || series.size() > 2)
        throw std::invalid_argument("render_scatter: need one or two series");
    detail::Range xr{series.front().curve.points().front().age,
                     series.front().curve.points().front().age};
    detail::Range yr{0.0, 0.0};
    for (const FittedSeries& s : series) {
        for (const Observation& o : s.curve.points()) {
            xr.expand(o.age);
            yr.expand(o.rate);
        }
        for (int k = 0; k <= 400; ++k) {
            const double u = s.fit.domain_lo() +
                             (s.fit.domain_hi() - s.fit.domain_lo()) * k / 400.0;
            yr.expand(eval_spline(s.fit, u));
        }
    }
    const detail::Range xp = detail::padded(xr.lo, xr.hi, false);
    const detail::Range yp = detail::padded(yr.lo, yr.hi, true);
    return {{xp.lo, xp.hi, spec.margin, spec.width - spec.margin},
            {yp.lo, yp.hi, spec.height - spec.margin, spec.margin}};
}

/// Scatter plot of observed rates with the fitted spline drawn through them.
inline std::string render_scatter(const std::vector<FittedSeries>& series, const PlotSpec& spec) {
    const PlotFrame frame = scatter_frame(series, spec);
    detail::SvgWriter svg(spec.width, spec.height);
    detail::draw_chrome(svg, spec, frame, "age", "rate");

    for (std::size_t i = 0; i < series.size(); ++i) {
        const FittedSeries& s = series[i];
        std::vector<std::pair<double, double>> pts;
        pts.reserve(401);
        for (int k = 0; k <= 400; ++k) {
            const double u = s.fit.domain_lo() +
                             (s.fit.domain_hi() - s.fit.domain_lo()) * k / 400.0;
            pts.emplace_back(u, eval_spline(s.fit, u));
        }
        svg.polyline(detail::polyline_points(pts, frame.x, frame.y), spec.color(i), 1.6);
        for (const Observation& o : s.curve.points())
            svg.circle(frame.x(o.age), frame.y(o.rate), 2.5, spec.color(i));
    }

    detail::draw_legend(svg, spec, frame, series.size());
    return svg.finish();
}

/// Equally spaced samples of every basis function and its first derivative.
struct BasisTraces {
    std::vector<double> parameters;
    std::vector<std::vector<double>> values;       // [basis][sample]
    std::vector<std::vector<double>> derivatives;  // [basis][sample]
};

inline BasisTraces sample_basis_traces(const KnotVector& kv, std::size_t count) {
    if (count < 2) throw std::invalid_argument("sample_basis_traces: need at least 2 samples");
    const std::size_t n = kv.basis_count();
    BasisTraces t;
    t.parameters.resize(count);
    t.values.assign(n, std::vector<double>(count, 0.0));
    t.derivatives.assign(n, std::vector<double>(count, 0.0));
    const double lo = kv.domain_lo(), hi = kv.domain_hi();
    for (std::size_t k = 0; k < count; ++k) {
        const double u =
            k + 1 == count ? hi : lo + (hi - lo) * static_cast<double>(k) / (count - 1);
        t.parameters[k] = u;
        const BasisDerivs d = basis_derivatives(kv, u, 1);
        for (std::size_t j = 0; j < d.d[0].size(); ++j) {
            t.values[d.first + j][k] = d.d[0][j];
            t.derivatives[d.first + j][k] = d.d[1][j];
        }
    }
    return t;
}

/// Basis-function gallery: one polyline per basis function over the knot
/// domain, with knot positions marked; optional dashed derivative panel below.
/// Always 400 samples per trace.
inline std::string render_basis(const KnotVector& kv, bool include_derivatives,
                                const PlotSpec& spec) {
    detail::check_spec(spec);
    const BasisTraces traces = sample_basis_traces(kv, 400);
    const std::size_t n = traces.values.size();

    static constexpr const char* kPalette[] = {"#1f3a93", "#c0392b", "#1e8449", "#7d3c98",
                                               "#b7950b", "#117a8b", "#a04000", "#4a4a4a"};
    auto trace_color = [&](std::size_t i) {
        if (i < spec.series_colors.size()) return spec.series_colors[i];
        return std::string(kPalette[i % 8]);
    };

    const double panel_gap = include_derivatives ? 44.0 : 0.0;
    const double value_bottom = include_derivatives
                                    ? 0.5 * (spec.height - panel_gap)
                                    : spec.height - spec.margin;

    detail::Range vy{0.0, 0.0};
    for (const auto& trace : traces.values)
        for (double v : trace) vy.expand(v);
    const detail::Range vyp = detail::padded(vy.lo, vy.hi, true);
    const PlotFrame value_frame{
        {kv.domain_lo(), kv.domain_hi(), spec.margin, spec.width - spec.margin},
        {vyp.lo, vyp.hi, value_bottom, spec.margin}};

    detail::SvgWriter svg(spec.width, spec.height);
    detail::draw_chrome(svg, spec, value_frame, "u", "basis value");

    for (std::size_t k = 0; k < kv.knots().size(); ++k) {
        const double px = value_frame.x(kv.knots()[k]);
        svg.line(px, value_frame.y.out_lo, px, value_frame.y.out_hi, "#dddddd", 1.0, "2,3");
    }

    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<double, double>> pts;
        pts.reserve(traces.parameters.size());
        for (std::size_t k = 0; k < traces.parameters.size(); ++k)
            pts.emplace_back(traces.parameters[k], traces.values[i][k]);
        svg.polyline(detail::polyline_points(pts, value_frame.x, value_frame.y), trace_color(i),
                     1.4);
    }

    if (include_derivatives) {
        detail::Range dy{0.0, 0.0};
        for (const auto& trace : traces.derivatives)
            for (double v : trace) dy.expand(v);
        const detail::Range dyp = detail::padded(dy.lo, dy.hi, true);
        const PlotFrame deriv_frame{
            value_frame.x,
            {dyp.lo, dyp.hi, spec.height - spec.margin, value_bottom + panel_gap}};

        svg.rect(deriv_frame.x.out_lo, value_bottom + panel_gap,
                 deriv_frame.x.out_hi - deriv_frame.x.out_lo,
                 spec.height - spec.margin - value_bottom - panel_gap, "#cccccc");
        svg.line(deriv_frame.x.out_lo, deriv_frame.y(0.0), deriv_frame.x.out_hi,
                 deriv_frame.y(0.0), "#999999", 1.0, "4,3");
        // derivative traces are <path> elements so the polyline count stays
        // one per basis function
        for (std::size_t i = 0; i < n; ++i) {
            std::string d;
            for (std::size_t k = 0; k < traces.parameters.size(); ++k) {
                d += k == 0 ? "M" : " L";
                d += detail::SvgWriter::px(deriv_frame.x(traces.parameters[k])) + ' ' +
                     detail::SvgWriter::px(deriv_frame.y(traces.derivatives[i][k]));
            }
            svg.path(d, trace_color(i), 1.2, "5,3");
        }
    }

    return svg.finish();
}

/// CSV of a sampled phase path: age,velocity,acceleration.
inline std::string emit_csv(const PhasePath& path) {
    if (path.samples.empty()) throw std::invalid_argument("emit_csv: empty path");
    std::string out = "age,velocity,acceleration\n";
    for (const PhaseSample& s : path.samples)
        out += format_shortest(s.age) + ',' + format_shortest(s.velocity) + ',' +
               format_shortest(s.acceleration) + '\n';
    return out;
}

/// CSV landmark report: feature,age,value. Crossings and extrema carry their
/// refined ages; whole-path summaries leave the age field empty.
inline std::string emit_csv(const PhaseFeatures& f) {
    std::string out = "feature,age,value\n";
    for (const ZeroVelocityCrossing& z : f.zero_velocity_ages)
        out += std::string("zero_velocity_") + to_string(z.direction) + ',' +
               format_shortest(z.age) + ',' + format_shortest(z.curve_value) + '\n';
    for (const VelocityExtremum& e : f.velocity_local_extrema)
        out += std::string(e.is_maximum ? "velocity_max" : "velocity_min") + ',' +
               format_shortest(e.age) + ',' + format_shortest(e.velocity) + '\n';
    out += "max_positive_velocity," + format_shortest(f.max_positive_velocity_age) + ',' +
           format_shortest(f.max_positive_velocity) + '\n';
    out += "max_negative_velocity," + format_shortest(f.max_negative_velocity_age) + ',' +
           format_shortest(f.max_negative_velocity) + '\n';
    out += "max_radius,," + format_shortest(f.max_radius) + '\n';
    out += "mean_radius,," + format_shortest(f.mean_radius) + '\n';
    out += std::string("skew,,") + to_string(f.skew_direction) + '\n';
    out += std::string("bimodal,,") + (f.bimodal ? "true" : "false") + '\n';
    return out;
}

/// CSV of a rate table. Wide layout needs a complete age × year grid; long
/// layout writes whatever cells exist, grouped by year.
inline std::string emit_csv(const RateTable& table, TableFormat format) {
    if (format == TableFormat::wide_format) {
        if (!table.complete())
            throw std::invalid_argument(
                "emit_csv: table has missing cells; only the long layout can express it");
        std::string out = "age";
        for (const std::string& y : table.years()) out += ',' + y;
        out += '\n';
        for (std::size_t r = 0; r < table.ages().size(); ++r) {
            out += format_shortest(table.ages()[r]);
            for (std::size_t y = 0; y < table.years().size(); ++y)
                out += ',' + format_shortest(table.observations(y)[r].rate);
            out += '\n';
        }
        return out;
    }
    std::string out = "year,age,rate\n";
    for (std::size_t y = 0; y < table.years().size(); ++y)
        for (const Observation& o : table.observations(y))
            out += table.years()[y] + ',' + format_shortest(o.age) + ',' +
                   format_shortest(o.rate) + '\n';
    return out;
}

/// CSV of observed vs. fitted values at the observation ages.
inline std::string emit_fit_csv(const RateCurve& curve, const Spline& fit) {
    std::string out = "age,observed,fitted\n";
    for (const Observation& o : curve.points())
        out += format_shortest(o.age) + ',' + format_shortest(o.rate) + ',' +
               format_shortest(eval_spline(fit, o.age)) + '\n';
    return out;
}

}  // namespace phasefit
