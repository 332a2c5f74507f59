#include "ptsrc/forward.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ptsrc {

namespace {

void require_dimension(int n) {
    if (n < 1 || n > 3) {
        throw std::invalid_argument("kernel dimension must be 1, 2 or 3");
    }
}

}  // namespace

double heat_kernel(int n, double r, double t) {
    require_dimension(n);
    if (!(t > 0.0)) {
        throw std::invalid_argument("heat_kernel: t must be positive");
    }
    if (r < 0.0) {
        throw std::invalid_argument("heat_kernel: distance must be nonnegative");
    }
    return std::pow(4.0 * std::numbers::pi * t, -0.5 * n) * std::exp(-r * r / (4.0 * t));
}

double v_kernel(int n, double gamma, double t) {
    require_dimension(n);
    if (!(gamma > 0.0) || !(t > 0.0)) {
        throw std::invalid_argument("v_kernel: gamma and t must be positive");
    }
    const double e = std::exp(-gamma * gamma / (4.0 * t));
    switch (n) {
        case 1:
            return e / std::sqrt(std::numbers::pi * t);
        case 2:
            return e / (4.0 * std::numbers::pi * t);
        default:
            return gamma * e / (2.0 * std::sqrt(std::numbers::pi) * t * std::sqrt(t));
    }
}

double bessel_k0(double x) {
    if (!(x > 0.0)) {
        throw std::invalid_argument("bessel_k0: argument must be positive");
    }
    return std::cyl_bessel_k(0.0, x);
}

double green_laplace(int n, double r, double lambda, double reaction, double c) {
    require_dimension(n);
    if (!(r > 0.0)) {
        throw std::invalid_argument("green_laplace: kernel is singular at r = 0");
    }
    const double s = lambda + reaction;
    if (n == 3) {
        if (s < 0.0) {
            throw std::invalid_argument("green_laplace: need lambda + reaction >= 0");
        }
        return std::exp(-std::sqrt(s) * r) / (4.0 * std::numbers::pi * r);
    }
    if (!(s > 0.0)) {
        throw std::invalid_argument("green_laplace: need lambda + reaction > 0");
    }
    if (n == 2) {
        return bessel_k0(std::sqrt(s) * r) / (2.0 * std::numbers::pi);
    }
    if (!(c > 0.0)) {
        throw std::invalid_argument("green_laplace: diffusivity must be positive");
    }
    const double mu = std::sqrt(s / c);
    return std::exp(-mu * r) / (2.0 * c * mu);
}

double green_laplace_2d_asymptotic(double r, double lambda) {
    if (!(r > 0.0) || !(lambda > 0.0)) {
        throw std::invalid_argument("green_laplace_2d_asymptotic: r and lambda must be positive");
    }
    return std::exp(-std::sqrt(lambda) * r) /
           (2.0 * std::sqrt(2.0 * std::numbers::pi * r) * std::pow(lambda, 0.25));
}

}  // namespace ptsrc
