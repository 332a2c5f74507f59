#include "ptsrc/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace ptsrc::quad {

namespace {

double simpson_panel(const Integrand& f, double a, double fa, double b, double fb, double m, double fm,
                     double whole, double abs_tol, double rel_tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double both = left + right;
    const double diff = both - whole;
    const double tol = std::max(abs_tol, rel_tol * std::abs(both));
    if (depth <= 0 || std::abs(diff) <= 15.0 * tol) {
        return both + diff / 15.0;
    }
    return simpson_panel(f, a, fa, m, fm, lm, flm, left, 0.5 * abs_tol, rel_tol, depth - 1) +
           simpson_panel(f, m, fm, b, fb, rm, frm, right, 0.5 * abs_tol, rel_tol, depth - 1);
}

GaussRule build_rule(int n) {
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

}  // namespace

double adaptive_simpson(const Integrand& f, double a, double b, double abs_tol, double rel_tol,
                        int max_depth) {
    if (a == b) {
        return 0.0;
    }
    const double fa = f(a);
    const double fb = f(b);
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_panel(f, a, fa, b, fb, m, fm, whole, abs_tol, rel_tol, max_depth);
}

const GaussRule& gauss_legendre(int order) {
    if (order < 1 || order > 128) {
        throw std::invalid_argument("gauss_legendre: order must be in [1, 128]");
    }
    static std::mutex mutex;
    static std::map<int, GaussRule> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(order);
    if (it == cache.end()) {
        it = cache.emplace(order, build_rule(order)).first;
    }
    return it->second;
}

double gauss(const Integrand& f, double a, double b, int order) {
    const GaussRule& rule = gauss_legendre(order);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    }
    return sum * half;
}

}  // namespace ptsrc::quad
