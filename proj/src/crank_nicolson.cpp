#include "ptsrc/forward.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace ptsrc {

namespace {

struct Tridiagonal {
    std::vector<double> lower, diag, upper;
    explicit Tridiagonal(std::size_t n) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0) {}
};

// Thomas algorithm; `rhs` is overwritten with the solution.
void solve_tridiagonal(const Tridiagonal& m, std::vector<double>& rhs, std::vector<double>& scratch) {
    const std::size_t n = rhs.size();
    scratch.resize(n);
    double beta = m.diag[0];
    if (beta == 0.0) {
        throw SolverError("crank_nicolson_1d: singular tridiagonal system");
    }
    rhs[0] /= beta;
    for (std::size_t i = 1; i < n; ++i) {
        scratch[i] = m.upper[i - 1] / beta;
        beta = m.diag[i] - m.lower[i] * scratch[i];
        if (beta == 0.0) {
            throw SolverError("crank_nicolson_1d: singular tridiagonal system");
        }
        rhs[i] = (rhs[i] - m.lower[i] * rhs[i - 1]) / beta;
    }
    for (std::size_t i = n - 1; i-- > 0;) {
        rhs[i] -= scratch[i + 1] * rhs[i + 1];
    }
}

double sample_linear(const TimeSeriesValue& g, const TimeGrid& grid, double t) {
    if (g.is_constant()) {
        return g.values.front();
    }
    const double s = std::clamp(t / grid.tau, 0.0, static_cast<double>(grid.steps));
    const auto k = std::min(static_cast<std::size_t>(std::floor(s)), grid.steps - 1);
    const double th = s - static_cast<double>(k);
    return (1.0 - th) * g.values[k] + th * g.values[k + 1];
}

const TimeSeriesValue& boundary_data(const BoundaryCondition& bc) {
    if (const auto* d = std::get_if<Dirichlet>(&bc)) {
        return d->g;
    }
    return std::get<Robin>(bc).g;
}

// Spatial operator A u + c(t): tridiagonal part plus boundary forcing.
struct SpatialOperator {
    Tridiagonal a;
    bool dirichlet_left = false;
    bool dirichlet_right = false;
    double robin_left_gain = 0.0;   // c_0 = gain * g_left
    double robin_right_gain = 0.0;  // c_M = gain * g_right

    explicit SpatialOperator(std::size_t n) : a(n) {}

    void apply(const std::vector<double>& u, std::vector<double>& out) const {
        const std::size_t n = u.size();
        for (std::size_t i = 0; i < n; ++i) {
            double v = a.diag[i] * u[i];
            if (i > 0) v += a.lower[i] * u[i - 1];
            if (i + 1 < n) v += a.upper[i] * u[i + 1];
            out[i] = v;
        }
    }
};

}  // namespace

FieldHistory crank_nicolson_1d(const Scenario& scenario, const CrankNicolsonOptions& options, bool keep_field) {
    const auto* interval = std::get_if<Interval1D>(&scenario.domain);
    if (!interval) {
        throw SolverError("crank_nicolson_1d: requires an interval domain");
    }
    if (!scenario.coefficients) {
        throw ValidationError("crank_nicolson_1d: coefficients are required");
    }
    const auto& coeffs = *scenario.coefficients;
    if (!coeffs.elliptic()) {
        throw ValidationError("coefficients.a2: ellipticity M1>0 violated");
    }
    const TimeGrid& grid = scenario.grid;
    if (!grid.valid()) {
        throw ValidationError("crank_nicolson_1d: invalid time grid");
    }
    const double a = interval->a;
    const double b = interval->b;
    for (const auto& src : scenario.sources) {
        if (!(src.location[0] > a && src.location[0] < b)) {
            throw ValidationError("crank_nicolson_1d: source outside (a, b)");
        }
    }
    for (const auto& p : scenario.sensors) {
        if (p[0] < a || p[0] > b) {
            throw ValidationError("crank_nicolson_1d: sensor outside [a, b]");
        }
    }

    double h = options.h > 0.0 ? options.h : scenario.fd_spacing.value_or((b - a) / 400.0);
    const auto cells = static_cast<std::size_t>(std::max(2.0, std::round((b - a) / h)));
    h = (b - a) / static_cast<double>(cells);
    const std::size_t n = cells + 1;

    FieldHistory out;
    out.x.resize(n);
    for (std::size_t m = 0; m < n; ++m) {
        out.x[m] = (m + 1 == n) ? b : a + h * static_cast<double>(m);
    }

    SpatialOperator op(n);
    const double h2 = h * h;
    for (std::size_t m = 0; m < n; ++m) {
        const double x = out.x[m];
        const double d2 = coeffs.a2(x);
        const double d1 = coeffs.a1(x);
        const double d0 = coeffs.a0(x);
        op.a.lower[m] = d2 / h2 + d1 / (2.0 * h);
        op.a.upper[m] = d2 / h2 - d1 / (2.0 * h);
        op.a.diag[m] = -2.0 * d2 / h2 - d0;
    }
    // Boundaries: ghost-node elimination for u_x + sigma u = g.
    if (const auto* rb = std::get_if<Robin>(&interval->left)) {
        const double x = out.x.front();
        const double d2 = coeffs.a2(x);
        const double d1 = coeffs.a1(x);
        op.a.upper[0] = 2.0 * d2 / h2;
        op.a.diag[0] = -2.0 * d2 / h2 + 2.0 * d2 * rb->sigma / h + d1 * rb->sigma - coeffs.a0(x);
        op.robin_left_gain = -2.0 * d2 / h - d1;
    } else {
        op.dirichlet_left = true;
    }
    if (const auto* rb = std::get_if<Robin>(&interval->right)) {
        const double x = out.x.back();
        const double d2 = coeffs.a2(x);
        const double d1 = coeffs.a1(x);
        op.a.lower[n - 1] = 2.0 * d2 / h2;
        op.a.diag[n - 1] = -2.0 * d2 / h2 - 2.0 * d2 * rb->sigma / h + d1 * rb->sigma - coeffs.a0(x);
        op.robin_right_gain = 2.0 * d2 / h - d1;
    } else {
        op.dirichlet_right = true;
    }
    op.a.lower[0] = 0.0;
    op.a.upper[n - 1] = 0.0;

    // Point-source loads: hat weights on the bracketing nodes, scaled by 1/h.
    struct Load {
        std::size_t node;
        double left_weight;
        std::vector<double> q;
    };
    std::vector<Load> loads;
    for (const auto& src : scenario.sources) {
        const double s = (src.location[0] - a) / h;
        const auto m = std::min(static_cast<std::size_t>(std::floor(s)), cells - 1);
        loads.push_back({m, 1.0 - (s - static_cast<double>(m)), src.sample(grid)});
    }
    const auto q_at = [&](const Load& l, double t) {
        const double s = std::clamp(t / grid.tau, 0.0, static_cast<double>(grid.steps));
        const auto k = std::min(static_cast<std::size_t>(std::floor(s)), grid.steps - 1);
        const double th = s - static_cast<double>(k);
        return (1.0 - th) * l.q[k] + th * l.q[k + 1];
    };

    const TimeSeriesValue& g_left = boundary_data(interval->left);
    const TimeSeriesValue& g_right = boundary_data(interval->right);
    const double f0 = scenario.background.f0;

    // Forcing vector F(t) + c(t) at all nodes (Dirichlet rows are overwritten).
    const auto forcing = [&](double t, std::vector<double>& f) {
        std::fill(f.begin(), f.end(), f0);
        for (const auto& l : loads) {
            const double q = q_at(l, t);
            f[l.node] += q * l.left_weight / h;
            f[l.node + 1] += q * (1.0 - l.left_weight) / h;
        }
        if (!op.dirichlet_left) f[0] += op.robin_left_gain * sample_linear(g_left, grid, t);
        if (!op.dirichlet_right) f[n - 1] += op.robin_right_gain * sample_linear(g_right, grid, t);
    };

    // Initial state.
    std::vector<double> u(n, 0.0);
    const auto& u0 = scenario.background.u0;
    if (u0.size() == 1) {
        std::fill(u.begin(), u.end(), u0.front());
    } else {
        const double du = (b - a) / static_cast<double>(u0.size() - 1);
        for (std::size_t m = 0; m < n; ++m) {
            const double s = std::clamp((out.x[m] - a) / du, 0.0, static_cast<double>(u0.size() - 1));
            const auto i = std::min(static_cast<std::size_t>(std::floor(s)), u0.size() - 2);
            const double th = s - static_cast<double>(i);
            u[m] = (1.0 - th) * u0[i] + th * u0[i + 1];
        }
    }

    struct Probe {
        std::size_t node;
        double weight;
    };
    std::vector<Probe> probes;
    for (const auto& p : scenario.sensors) {
        const double s = (p[0] - a) / h;
        const auto m = std::min(static_cast<std::size_t>(std::floor(s)), cells - 1);
        probes.push_back({m, 1.0 - (s - static_cast<double>(m))});
    }
    out.traces.assign(probes.size(), std::vector<double>(grid.size(), 0.0));
    const auto record = [&](std::size_t k) {
        for (std::size_t j = 0; j < probes.size(); ++j) {
            const auto& pr = probes[j];
            out.traces[j][k] = pr.weight * u[pr.node] + (1.0 - pr.weight) * u[pr.node + 1];
        }
        if (keep_field) {
            out.u.push_back(u);
        }
    };
    if (keep_field) {
        out.u.reserve(grid.size());
    }
    record(0);

    // Implicit matrices for theta = 1/2 with step dt: I - theta dt A.
    const auto implicit_matrix = [&](double dt_theta) {
        Tridiagonal m(n);
        for (std::size_t i = 0; i < n; ++i) {
            m.lower[i] = -dt_theta * op.a.lower[i];
            m.diag[i] = 1.0 - dt_theta * op.a.diag[i];
            m.upper[i] = -dt_theta * op.a.upper[i];
        }
        if (op.dirichlet_left) {
            m.diag[0] = 1.0;
            m.upper[0] = 0.0;
        }
        if (op.dirichlet_right) {
            m.diag[n - 1] = 1.0;
            m.lower[n - 1] = 0.0;
        }
        return m;
    };
    const double tau = grid.tau;
    const Tridiagonal cn_matrix = implicit_matrix(0.5 * tau);
    const Tridiagonal be_matrix = implicit_matrix(0.5 * tau);  // implicit Euler with dt = tau / 2

    std::vector<double> rhs(n), au(n), f_old(n), f_new(n), scratch;
    const auto apply_dirichlet = [&](std::vector<double>& v, double t) {
        if (op.dirichlet_left) v[0] = sample_linear(g_left, grid, t);
        if (op.dirichlet_right) v[n - 1] = sample_linear(g_right, grid, t);
    };

    for (std::size_t k = 0; k < grid.steps; ++k) {
        const double t0 = grid.time(k);
        const double t1 = grid.time(k + 1);
        if (k < options.smoothing_steps) {
            // Two implicit Euler half steps damp the stiff modes excited by
            // the switched-on point loads.
            for (int half = 1; half <= 2; ++half) {
                const double th = t0 + 0.5 * tau * half;
                forcing(th, f_new);
                for (std::size_t i = 0; i < n; ++i) {
                    rhs[i] = u[i] + 0.5 * tau * f_new[i];
                }
                apply_dirichlet(rhs, th);
                solve_tridiagonal(be_matrix, rhs, scratch);
                u.swap(rhs);
            }
        } else {
            forcing(t0, f_old);
            forcing(t1, f_new);
            op.apply(u, au);
            for (std::size_t i = 0; i < n; ++i) {
                rhs[i] = u[i] + 0.5 * tau * (au[i] + f_old[i] + f_new[i]);
            }
            apply_dirichlet(rhs, t1);
            solve_tridiagonal(cn_matrix, rhs, scratch);
            u.swap(rhs);
        }
        record(k + 1);
    }
    return out;
}

void write_field_slice_csv(const FieldHistory& field, std::size_t k, const std::string& path) {
    if (k >= field.u.size()) {
        throw std::out_of_range("write_field_slice_csv: time index out of range");
    }
    std::ofstream os(path);
    if (!os) {
        throw std::runtime_error("write_field_slice_csv: cannot open " + path);
    }
    os << "x,u\n";
    for (std::size_t m = 0; m < field.x.size(); ++m) {
        os << fmt::format("{:.17g},{:.17g}\n", field.x[m], field.u[k][m]);
    }
}

}  // namespace ptsrc
