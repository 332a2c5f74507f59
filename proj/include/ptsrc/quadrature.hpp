#pragma once

#include <functional>
#include <vector>

namespace ptsrc::quad {

using Integrand = std::function<double(double)>;

/// Adaptive Simpson on [a, b]. Stops refining a panel once the Richardson
/// estimate is below max(abs_tol, rel_tol * |panel value|).
double adaptive_simpson(const Integrand& f, double a, double b, double abs_tol, double rel_tol = 0.0,
                        int max_depth = 40);

struct GaussRule {
    std::vector<double> nodes;    ///< on [-1, 1]
    std::vector<double> weights;
};

/// Gauss-Legendre rule with `order` points (Newton iteration on P_n).
const GaussRule& gauss_legendre(int order);

/// Fixed-order Gauss-Legendre on [a, b].
double gauss(const Integrand& f, double a, double b, int order = 16);

}  // namespace ptsrc::quad
