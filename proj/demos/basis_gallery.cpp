// Renders B-spline basis galleries for a few knot configurations, including
// the seven cubic functions on [-1, 1] with three interior knots.

#include <cstdio>
#include <fstream>
#include <string>

#include "phasefit/bspline.hpp"
#include "phasefit/render.hpp"

using namespace phasefit;

int main() {
    struct Config {
        const char* file;
        double lo, hi;
        std::size_t interior;
        int degree;
    };
    const Config configs[] = {
        {"basis_cubic_7.svg", -1.0, 1.0, 3, 3},
        {"basis_quadratic.svg", 0.0, 10.0, 6, 2},
        {"basis_quintic.svg", 0.0, 1.0, 4, 5},
    };
    for (const Config& c : configs) {
        const KnotVector kv = make_clamped_knots(c.lo, c.hi, c.interior, c.degree);
        PlotSpec spec;
        spec.title = "degree " + std::to_string(c.degree) + ", " +
                     std::to_string(c.interior) + " interior knots, " +
                     std::to_string(kv.basis_count()) + " functions";
        std::ofstream(c.file) << render_basis(kv, true, spec);
        std::printf("wrote %s (%zu basis functions)\n", c.file, kv.basis_count());
    }
    return 0;
}
