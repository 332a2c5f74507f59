#include "ptsrc/laplace.hpp"

#include "ptsrc/forward.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace ptsrc {

LaplaceValue laplace_transform(std::span<const double> series, const TimeGrid& grid, double lambda) {
    if (!(lambda > 0.0)) {
        throw ValidationError("laplace_transform: lambda must be positive");
    }
    if (!grid.valid() || series.size() != grid.size()) {
        throw ValidationError("laplace_transform: series does not match the time grid");
    }
    const std::size_t n = series.size();
    double sum = 0.5 * (series[0] + series[n - 1] * std::exp(-lambda * grid.horizon()));
    double sup = std::max(std::abs(series[0]), std::abs(series[n - 1]));
    for (std::size_t k = 1; k + 1 < n; ++k) {
        sum += series[k] * std::exp(-lambda * grid.time(k));
        sup = std::max(sup, std::abs(series[k]));
    }
    LaplaceValue v;
    v.value = grid.tau * sum;
    v.truncation_bound = std::abs(series[n - 1]) * std::exp(-lambda * grid.horizon()) / lambda;
    v.discretization_bound = grid.tau * grid.tau * lambda * sup / 12.0;
    return v;
}

bool LaplaceSamples::admissible(std::size_t k, double ratio) const {
    return std::isfinite(values[k]) && truncation[k] <= ratio * std::abs(values[k]);
}

LaplaceSamples laplace_grid(std::span<const double> series, const TimeGrid& grid, std::span<const double> lambdas,
                            std::string series_id) {
    if (lambdas.empty()) {
        throw ValidationError("laplace_grid: empty lambda grid");
    }
    for (std::size_t k = 1; k < lambdas.size(); ++k) {
        if (!(lambdas[k] > lambdas[k - 1])) {
            throw ValidationError("laplace_grid: lambda grid must be strictly increasing");
        }
    }
    LaplaceSamples out;
    out.series_id = std::move(series_id);
    out.horizon = grid.horizon();
    for (double lam : lambdas) {
        const LaplaceValue v = laplace_transform(series, grid, lam);
        out.lambdas.push_back(lam);
        out.values.push_back(v.value);
        out.truncation.push_back(v.truncation_bound);
        out.discretization.push_back(v.discretization_bound);
    }
    return out;
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0) || !(hi > lo) || count < 2) {
        throw ValidationError("geometric_grid: need 0 < lo < hi and at least two points");
    }
    std::vector<double> g(count);
    const double ratio = std::log(hi / lo) / static_cast<double>(count - 1);
    for (std::size_t k = 0; k < count; ++k) {
        g[k] = lo * std::exp(ratio * static_cast<double>(k));
    }
    g.back() = hi;
    return g;
}

LambdaAdvice lambda_grid_advisor(const TimeGrid& grid, double delta_hint, double c, std::size_t points) {
    if (!(grid.tau > 0.0)) {
        throw ValidationError("lambda_grid_advisor: tau must be positive");
    }
    const double t = grid.horizon();
    LambdaAdvice adv;
    const double from_horizon = t > 0.0 ? 4.0 / (t * t) : 0.0;
    const double from_gap = std::isfinite(delta_hint) && delta_hint > 0.0 ? 25.0 / (delta_hint * delta_hint) : 0.0;
    adv.lambda_min = std::max(from_horizon, from_gap);
    adv.lambda_max = c / grid.tau;
    if (adv.lambda_min >= adv.lambda_max) {
        throw IdentificationError(
            "lambda_grid_advisor",
            fmt::format("lambda_min = {:.6g} >= lambda_max = {:.6g}: the time step is too coarse for the "
                        "asymptotic regime at gap {:.6g}; refine tau or widen the sensor spacing",
                        adv.lambda_min, adv.lambda_max, delta_hint));
    }
    adv.lambdas = geometric_grid(adv.lambda_min, adv.lambda_max, std::max<std::size_t>(points, 12));
    adv.rationale = fmt::format(
        "lambda_min = max(4/T^2, 25/delta^2) = {:.6g} keeps sqrt(lambda) delta >= 5; lambda_max = {:.3g}/tau = "
        "{:.6g} bounds transform discretization error",
        adv.lambda_min, c, adv.lambda_max);
    return adv;
}

std::vector<double> convolve(const std::function<double(double)>& kernel, std::span<const double> q,
                             const TimeGrid& grid) {
    if (q.size() != grid.size()) {
        throw ValidationError("convolve: intensity does not match the time grid");
    }
    const CellMoments w = kernel_cell_moments(kernel, grid.tau, grid.steps, true);
    std::vector<double> out(grid.size(), 0.0);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            s += q[k - j] * (w.mass[j] - w.first[j]) + q[k - j - 1] * w.first[j];
        }
        out[k] = s;
    }
    return out;
}

}  // namespace ptsrc
