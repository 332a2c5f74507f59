#include "ptsrc/identify1d.hpp"

#include "ptsrc/forward.hpp"
#include "ptsrc/quadrature.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ptsrc {

namespace {

constexpr double kTruncationRatio = 1e-3;

void require_shared_grid(const LaplaceSamples& p1, const LaplaceSamples& p2, const char* stage) {
    if (p1.lambdas != p2.lambdas) {
        throw IdentificationError(stage, "transforms are not on a shared lambda grid");
    }
    if (p1.size() == 0) {
        throw IdentificationError(stage, "empty lambda grid");
    }
}

double relative_truncation(const LaplaceSamples& p, std::size_t k) {
    const double v = std::abs(p.values[k]);
    return v > 0.0 ? p.truncation[k] / v : INFINITY;
}

}  // namespace

AFit estimate_A(const LaplaceSamples& phi1, const LaplaceSamples& phi2) {
    require_shared_grid(phi1, phi2, "estimate_A");
    AFit fit;
    fit.lambdas = phi1.lambdas;
    fit.a_values.assign(phi1.size(), NAN);
    fit.used.assign(phi1.size(), false);
    std::size_t admissible = 0;
    for (std::size_t k = 0; k < phi1.size(); ++k) {
        if (!phi1.admissible(k, kTruncationRatio) || !phi2.admissible(k, kTruncationRatio)) {
            continue;
        }
        ++admissible;
        const double ratio = phi1.values[k] / phi2.values[k];
        if (!(ratio > 0.0) || !std::isfinite(ratio)) {
            ++fit.skipped_nonpositive;
            continue;
        }
        fit.a_values[k] = std::log(ratio) / (2.0 * std::sqrt(phi1.lambdas[k]));
        fit.used[k] = true;
    }
    if (2 * fit.skipped_nonpositive > admissible) {
        throw IdentificationError("estimate_A",
                                  "Phi1/Phi2 is nonpositive on most of the window; the data are inconsistent");
    }
    const auto n = static_cast<Eigen::Index>(std::count(fit.used.begin(), fit.used.end(), true));
    if (n < 3) {
        throw IdentificationError("estimate_A", "fewer than 3 admissible lambda points");
    }
    Eigen::MatrixXd design(n, 2);
    Eigen::VectorXd y(n);
    Eigen::Index row = 0;
    for (std::size_t k = 0; k < phi1.size(); ++k) {
        if (fit.used[k]) {
            design(row, 0) = 1.0;
            design(row, 1) = 1.0 / std::sqrt(phi1.lambdas[k]);
            y(row) = fit.a_values[k];
            ++row;
        }
    }
    const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(y);
    fit.A = coef(0);
    fit.slope = coef(1);
    fit.residual = std::sqrt((design * coef - y).squaredNorm() / static_cast<double>(n));
    return fit;
}

double admissibility_bound(const CoefficientField1D& coeffs, double b1, double b2) {
    return 0.5 * std::abs(coeffs.integral_r(b1, b2));
}

const char* to_string(Branch b) {
    switch (b) {
        case Branch::LeftBoundary:
            return "left_boundary";
        case Branch::RightBoundary:
            return "right_boundary";
        default:
            return "interior";
    }
}

double invert_distance_integral(const CoefficientField1D& coeffs, double b1, double m, int direction) {
    if (direction != 1 && direction != -1) {
        throw ValidationError("invert_distance_integral: direction must be +1 or -1");
    }
    const double end = direction > 0 ? coeffs.right() : coeffs.left();
    const double total = std::abs(coeffs.integral_r(b1, end));
    if (m < 0.0 || m > total) {
        throw ValidationError(fmt::format("invert_distance_integral: m = {:.6g} outside [0, {:.6g}]", m, total));
    }
    if (m == 0.0) {
        return b1;
    }
    double lo = b1;
    double hi = end;
    const double tol = 1e-12 * (coeffs.right() - coeffs.left());
    while (std::abs(hi - lo) > tol) {
        const double mid = 0.5 * (lo + hi);
        if (std::abs(coeffs.integral_r(b1, mid)) < m) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

Location1D locate_1d(const LaplaceSamples& phi1, const LaplaceSamples& phi2, const CoefficientField1D& coeffs,
                     double b1, double b2, Branch branch) {
    require_shared_grid(phi1, phi2, "locate_1d");
    if (!(b1 < b2)) {
        throw IdentificationError("locate_1d", "sensors must satisfy b1 < b2");
    }
    Location1D out;
    const double span = coeffs.right() - coeffs.left();
    const auto at = [&](double x, double y) { return std::abs(x - y) <= 1e-12 * span; };
    if (branch == Branch::LeftBoundary && !at(b1, coeffs.left())) {
        out.warnings.emplace_back("left-boundary branch needs b1 = a; using the interior branch");
        branch = Branch::Interior;
    }
    if (branch == Branch::RightBoundary && !at(b2, coeffs.right())) {
        out.warnings.emplace_back("right-boundary branch needs b2 = b; using the interior branch");
        branch = Branch::Interior;
    }
    out.branch = branch;

    const double R = coeffs.integral_r(b1, b2);
    const double R1 = coeffs.integral_r1(b1, b2);
    const bool closed_form = coeffs.a2_is_constant() && branch == Branch::Interior;
    const double sqrt_a2 = std::sqrt(coeffs.a2(b1));

    for (std::size_t k = 0; k < phi1.size(); ++k) {
        const double ratio = phi1.values[k] / phi2.values[k];
        if (!(ratio > 0.0) || !std::isfinite(ratio)) {
            continue;
        }
        LambdaEstimate e;
        e.lambda = phi1.lambdas[k];
        const double sl = std::sqrt(e.lambda);
        const double L = std::log(ratio);
        switch (branch) {
            case Branch::Interior:
                e.m = 0.5 * R - (R1 + L) / (2.0 * sl);
                break;
            case Branch::LeftBoundary:
                e.m = 0.5 * R - (L - std::log(2.0)) / (2.0 * sl) - R1 / (2.0 * sl);
                break;
            case Branch::RightBoundary:
                e.m = R - (0.5 * R + R1 / (2.0 * sl) + (L + std::log(2.0)) / (2.0 * sl));
                break;
        }
        e.bracketed = e.m > 0.0 && e.m < R;
        const double trunc = std::max(relative_truncation(phi1, k), relative_truncation(phi2, k));
        e.weight = std::max(0.0, 1.0 - trunc / kTruncationRatio);
        if (e.bracketed) {
            e.x1 = closed_form ? b1 + sqrt_a2 * e.m : invert_distance_integral(coeffs, b1, e.m, 1);
        } else {
            e.x1 = NAN;
        }
        out.per_lambda.push_back(e);
    }

    std::vector<const LambdaEstimate*> pool;
    for (const auto& e : out.per_lambda) {
        if (e.bracketed) {
            pool.push_back(&e);
        }
    }
    if (pool.empty()) {
        throw IdentificationError("locate_1d",
                                  "recovered distance integral is outside (0, int r) at every lambda; the source "
                                  "is not bracketed by the sensors");
    }
    std::sort(pool.begin(), pool.end(), [](auto* p, auto* q) { return p->x1 < q->x1; });
    double total = 0.0;
    for (auto* e : pool) {
        total += e->weight;
    }
    const bool uniform = !(total > 0.0);
    if (uniform) {
        out.warnings.emplace_back("every lambda exceeds the truncation guard; median taken without weights");
        total = static_cast<double>(pool.size());
    }
    double acc = 0.0;
    out.x1_hat = pool.back()->x1;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const double w = uniform ? 1.0 : pool[i]->weight;
        acc += w;
        if (acc >= 0.5 * total) {
            // Exactly half the mass: average with the next estimate.
            if (acc == 0.5 * total && i + 1 < pool.size()) {
                out.x1_hat = 0.5 * (pool[i]->x1 + pool[i + 1]->x1);
            } else {
                out.x1_hat = pool[i]->x1;
            }
            break;
        }
    }
    return out;
}

IntensityRecovery recover_intensity_1d(std::span<const double> psi, const TimeGrid& grid,
                                       const CoefficientField1D& coeffs, double x1_hat, double b,
                                       const DeconvolutionOptions& options) {
    if (x1_hat == b) {
        throw IdentificationError("recover_intensity_1d", "source estimate coincides with the sensor");
    }
    IntensityRecovery out;
    out.delta0 = std::abs(coeffs.integral_r(x1_hat, b));
    out.amplitude = std::exp(coeffs.integral_r1(x1_hat, b)) / (2.0 * std::sqrt(coeffs.a2(x1_hat)));
    const auto potential = [&](double x) {
        const double a1 = coeffs.a1(x);
        return coeffs.a0(x) + a1 * a1 / (4.0 * coeffs.a2(x));
    };
    const double lo = std::min(x1_hat, b);
    const double hi = std::max(x1_hat, b);
    out.decay = quad::adaptive_simpson(potential, lo, hi, 1e-12) / (hi - lo);
    const double c0 = out.amplitude;
    const double kappa = out.decay;
    const double d0 = out.delta0;
    const auto kernel = [=](double t) { return c0 * std::exp(-kappa * t) * v_kernel(1, d0, t); };
    out.deconvolution = volterra_deconvolve(psi, grid, kernel, options);
    out.q = out.deconvolution.q;
    return out;
}

std::vector<AlternationFinding> alternation_diagnostic(std::vector<double> sources, std::vector<double> sensors,
                                                       const Interval1D& domain) {
    std::sort(sources.begin(), sources.end());
    std::sort(sensors.begin(), sensors.end());
    std::vector<AlternationFinding> out;
    const std::size_t r = sources.size();
    if (r < 2) {
        return out;
    }
    const auto all_sensors = [&](auto pred) { return std::all_of(sensors.begin(), sensors.end(), pred); };
    if (domain.a < sources[0] && all_sensors([&](double y) { return y > sources[1]; })) {
        out.push_back({1, fmt::format("every sensor lies right of the two leftmost sources {:.6g} < {:.6g}",
                                      sources[0], sources[1])});
    }
    if (sources[r - 1] < domain.b && all_sensors([&](double y) { return y < sources[r - 2]; })) {
        out.push_back({2, fmt::format("every sensor lies left of the two rightmost sources {:.6g} < {:.6g}",
                                      sources[r - 2], sources[r - 1])});
    }
    for (std::size_t i = 0; i + 2 < r; ++i) {
        const double lo = sources[i];
        const double hi = sources[i + 2];
        if (all_sensors([&](double y) { return y < lo || y > hi; })) {
            out.push_back({3, fmt::format("no sensor in [{:.6g}, {:.6g}] spanning three consecutive sources", lo,
                                          hi)});
            break;
        }
    }
    return out;
}

}  // namespace ptsrc
