#include "ptsrc/forward.hpp"

#include <cmath>
#include <stdexcept>

namespace ptsrc {

GreenEval green_1d_asymptotic(const CoefficientField1D& coeffs, double x1, double b, double lambda,
                              double lambda_min) {
    if (x1 == b) {
        throw std::invalid_argument("green_1d_asymptotic: source and sensor coincide");
    }
    const double lo = coeffs.left();
    const double hi = coeffs.right();
    if (x1 < lo || x1 > hi || b < lo || b > hi) {
        throw std::invalid_argument("green_1d_asymptotic: points must lie in the coefficient interval");
    }
    if (!(lambda > 0.0)) {
        throw std::invalid_argument("green_1d_asymptotic: lambda must be positive");
    }

    GreenEval g;
    g.dimension = 1;
    g.mode = GreenMode::Asymptotic;
    g.integral_r = coeffs.integral_r(x1, b);
    g.integral_r1 = coeffs.integral_r1(x1, b);
    const double delta = std::abs(g.integral_r);
    g.lambda_min = lambda_min > 0.0 ? lambda_min : 25.0 / (delta * delta);
    g.valid = lambda >= g.lambda_min;
    const double sl = std::sqrt(lambda);
    g.value = std::exp(-sl * delta + g.integral_r1) / (2.0 * std::sqrt(lambda * coeffs.a2(x1)));
    return g;
}

}  // namespace ptsrc
