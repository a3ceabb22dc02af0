#pragma once

// Gauss-Legendre rules, exact for polynomials of degree 2k-1.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace phasefit {

struct QuadratureRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;  // sum to 2
};

/// k-point Gauss-Legendre rule on [-1, 1]. Nodes are the roots of the
/// Legendre polynomial P_k, found by Newton iteration from the Chebyshev
/// initial guesses; weights are 2 / ((1 - x^2) P_k'(x)^2).
inline QuadratureRule gauss_legendre(std::size_t k) {
    if (k == 0) throw std::invalid_argument("gauss_legendre: need at least one node");
    QuadratureRule rule;
    rule.nodes.resize(k);
    rule.weights.resize(k);
    const std::size_t half = (k + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        double x = std::cos(M_PI * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(k) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            // three-term recurrence for P_k and its derivative at x
            double p0 = 1.0, p1 = x;
            for (std::size_t j = 2; j <= k; ++j) {
                const double pj = ((2.0 * static_cast<double>(j) - 1.0) * x * p1 -
                                   (static_cast<double>(j) - 1.0) * p0) /
                                  static_cast<double>(j);
                p0 = p1;
                p1 = pj;
            }
            dp = static_cast<double>(k) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[k - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.weights[i] = w;
        rule.weights[k - 1 - i] = w;
    }
    if (k % 2 == 1) rule.nodes[k / 2] = 0.0;
    return rule;
}

}  // namespace phasefit
