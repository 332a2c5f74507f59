#include "ptsrc/forward.hpp"

#include "ptsrc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ptsrc {

CellMoments kernel_cell_moments(const std::function<double(double)>& kernel, double step, std::size_t cells,
                                bool with_first_moment) {
    CellMoments m;
    m.mass.assign(cells, 0.0);
    if (with_first_moment) {
        m.first.assign(cells, 0.0);
    }
    if (cells == 0) {
        return m;
    }

    // Kernels may vanish to all orders at u = 0 and be sharply peaked inside
    // the first cells; evaluate at u = 0 as the limit value.
    const auto k = [&](double u) { return u > 0.0 ? kernel(u) : 0.0; };

    // Crude scale for the absolute tolerance floor.
    double scale = 0.0;
    for (std::size_t j = 0; j < cells; ++j) {
        const double a = step * static_cast<double>(j);
        scale += quad::gauss(k, a, a + step, 4);
    }
    scale = std::max(std::abs(scale), std::numeric_limits<double>::min());
    const double abs_tol = 1e-17 * scale;
    constexpr double rel_tol = 1e-12;

    for (std::size_t j = 0; j < cells; ++j) {
        const double a = step * static_cast<double>(j);
        const double b = a + step;
        m.mass[j] = quad::adaptive_simpson(k, a, b, abs_tol, rel_tol, 50);
        if (with_first_moment) {
            m.first[j] = quad::adaptive_simpson([&](double u) { return k(u) * (u - a) / step; }, a, b, abs_tol,
                                                rel_tol, 50);
        }
    }
    return m;
}

std::vector<double> free_space_response(std::span<const PointSource> sources, const Point& sensor,
                                        const TimeGrid& grid, int n, double reaction) {
    if (!grid.valid()) {
        throw ValidationError("free_space_response: invalid time grid");
    }
    if (n < 1 || n > 3) {
        throw ValidationError("free_space_response: dimension must be 1, 2 or 3");
    }
    std::vector<double> psi(grid.size(), 0.0);
    for (const auto& src : sources) {
        if (src.location.size() != n || sensor.size() != n) {
            throw ValidationError("free_space_response: dimension mismatch");
        }
        const double r = (src.location - sensor).norm();
        if (r == 0.0) {
            throw ValidationError("free_space_response: sensor coincides with a source");
        }
        const auto kernel = [=](double u) { return std::exp(-reaction * u) * heat_kernel(n, r, u); };

        if (const auto* c = std::get_if<ConstantIntensity>(&src.intensity)) {
            if (c->q == 0.0) {
                continue;
            }
            const CellMoments w = kernel_cell_moments(kernel, grid.tau, grid.steps, false);
            double acc = 0.0;
            for (std::size_t k = 1; k < grid.size(); ++k) {
                acc += w.mass[k - 1];
                psi[k] += c->q * acc;
            }
            continue;
        }

        const std::vector<double> q = src.sample(grid);
        if (std::all_of(q.begin(), q.end(), [](double v) { return v == 0.0; })) {
            continue;
        }
        const CellMoments w = kernel_cell_moments(kernel, grid.tau, grid.steps, true);
        // q(t_k - u) is linear on each lag cell [j tau, (j+1) tau], running
        // from q[k-j] to q[k-j-1].
        for (std::size_t k = 1; k < grid.size(); ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                s += q[k - j] * (w.mass[j] - w.first[j]) + q[k - j - 1] * w.first[j];
            }
            psi[k] += s;
        }
    }
    return psi;
}

std::vector<double> free_space_background(const Background& background, const TimeGrid& grid, double reaction) {
    if (background.u0.size() != 1) {
        throw ValidationError("free_space_background: u0 must be spatially constant");
    }
    const double c = background.u0.front();
    std::vector<double> w(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid.time(k);
        const double decay = std::exp(-reaction * t);
        const double forced = reaction > 0.0 ? -std::expm1(-reaction * t) / reaction : t;
        w[k] = c * decay + background.f0 * forced;
    }
    return w;
}

}  // namespace ptsrc
