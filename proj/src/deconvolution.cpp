#include "ptsrc/forward.hpp"
#include "ptsrc/laplace.hpp"

#include <algorithm>
#include <cmath>

namespace ptsrc {

namespace {

constexpr double kFloorRatio = 1e-14;

// Rows are the coarse nodes T_1..T_M, columns the hat coefficients
// x_0..x_M. Columns 1..M form a lower-triangular Toeplitz block with symbol
// c; column 0 carries only the half hat at t = 0.
struct HatSystem {
    std::vector<double> c;    // c[p]: weight of x_{k-p} in row k (p <= k - 1)
    std::vector<double> v;    // v[k-1]: weight of x_0 in row k
    Eigen::VectorXd data;     // psi at coarse nodes 1..M
    Eigen::MatrixXd gram;     // W^T W
    Eigen::VectorXd rhs;      // W^T psi
};

HatSystem assemble(const CellMoments& moments, Eigen::VectorXd data) {
    const auto m = static_cast<Eigen::Index>(moments.mass.size());
    HatSystem s;
    s.c.resize(static_cast<std::size_t>(m));
    s.v.resize(static_cast<std::size_t>(m));
    for (Eigen::Index l = 0; l < m; ++l) {
        const auto i = static_cast<std::size_t>(l);
        const double rising = moments.mass[i] - moments.first[i];  // weight of the later node
        s.c[i] = rising + (l > 0 ? moments.first[i - 1] : 0.0);
        s.v[i] = moments.first[i];
    }
    const auto& w = s.c;
    s.gram.resize(m + 1, m + 1);
    // Toeplitz block: (W^T W)(i, j) = sum_{l=0}^{M-1-j} w[l + d] w[l], d = j - i >= 0.
    std::vector<double> partial(static_cast<std::size_t>(m));
    for (Eigen::Index d = 0; d < m; ++d) {
        double acc = 0.0;
        for (Eigen::Index l = 0; l + d < m; ++l) {
            acc += w[static_cast<std::size_t>(l + d)] * w[static_cast<std::size_t>(l)];
            partial[static_cast<std::size_t>(l)] = acc;
        }
        for (Eigen::Index j = d; j < m; ++j) {
            const double val = partial[static_cast<std::size_t>(m - 1 - j)];
            s.gram(j - d + 1, j + 1) = val;
            s.gram(j + 1, j - d + 1) = val;
        }
    }
    // Border: column 0 against itself and the Toeplitz columns (row k = 1..M at index k - 1).
    double vv = 0.0;
    for (double x : s.v) vv += x * x;
    s.gram(0, 0) = vv;
    for (Eigen::Index j = 1; j <= m; ++j) {
        double acc = 0.0;
        for (Eigen::Index k = j; k <= m; ++k) {
            acc += s.v[static_cast<std::size_t>(k - 1)] * w[static_cast<std::size_t>(k - j)];
        }
        s.gram(0, j) = acc;
        s.gram(j, 0) = acc;
    }
    s.rhs.resize(m + 1);
    double acc0 = 0.0;
    for (Eigen::Index k = 1; k <= m; ++k) acc0 += s.v[static_cast<std::size_t>(k - 1)] * data(k - 1);
    s.rhs(0) = acc0;
    for (Eigen::Index j = 1; j <= m; ++j) {
        double acc = 0.0;
        for (Eigen::Index k = j; k <= m; ++k) {
            acc += w[static_cast<std::size_t>(k - j)] * data(k - 1);
        }
        s.rhs(j) = acc;
    }
    s.data = std::move(data);
    return s;
}

Eigen::MatrixXd dense_w(const HatSystem& s) {
    const auto m = static_cast<Eigen::Index>(s.c.size());
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, m + 1);
    for (Eigen::Index k = 1; k <= m; ++k) {
        w(k - 1, 0) = s.v[static_cast<std::size_t>(k - 1)];
        for (Eigen::Index j = 1; j <= k; ++j) {
            w(k - 1, j) = s.c[static_cast<std::size_t>(k - j)];
        }
    }
    return w;
}

// Normal equations square the condition number; below this relative weight
// the stacked least-squares problem [W; sqrt(eps) D] is factorized instead.
constexpr double kNormalEquationLimit = 1e-8;

Eigen::VectorXd solve(const HatSystem& s, double epsilon, double scale) {
    const Eigen::Index m = s.gram.rows();
    if (epsilon < kNormalEquationLimit * scale) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * m - 1, m);
        a.topRows(m - 1) = dense_w(s);
        const double root = std::sqrt(epsilon);
        for (Eigen::Index i = 0; i + 1 < m; ++i) {
            a(m - 1 + i, i) = -root;
            a(m - 1 + i, i + 1) = root;
        }
        Eigen::VectorXd b = Eigen::VectorXd::Zero(2 * m - 1);
        b.head(m - 1) = s.data;
        return a.householderQr().solve(b);
    }
    Eigen::MatrixXd a = s.gram;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double diag = (i == 0 || i == m - 1) ? 1.0 : 2.0;
        a(i, i) += epsilon * diag;
        if (i + 1 < m) {
            a(i, i + 1) -= epsilon;
            a(i + 1, i) -= epsilon;
        }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
        return llt.solve(s.rhs);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success) {
        throw IdentificationError("deconvolution", "normal equations could not be factorized");
    }
    return ldlt.solve(s.rhs);
}

double residual(const HatSystem& s, const Eigen::VectorXd& x) {
    const auto m = static_cast<Eigen::Index>(s.c.size());
    double sum = 0.0;
    for (Eigen::Index k = 1; k <= m; ++k) {
        double acc = s.v[static_cast<std::size_t>(k - 1)] * x(0);
        for (Eigen::Index j = 1; j <= k; ++j) {
            acc += s.c[static_cast<std::size_t>(k - j)] * x(j);
        }
        const double r = acc - s.data(k - 1);
        sum += r * r;
    }
    return std::sqrt(sum);
}

double seminorm(const Eigen::VectorXd& x) {
    double sum = 0.0;
    for (Eigen::Index i = 1; i < x.size(); ++i) {
        const double d = x(i) - x(i - 1);
        sum += d * d;
    }
    return std::sqrt(sum);
}

}  // namespace

DeconvolutionResult volterra_deconvolve(std::span<const double> psi, const TimeGrid& grid,
                                        const std::function<double(double)>& kernel,
                                        const DeconvolutionOptions& options) {
    if (!grid.valid() || psi.size() != grid.size()) {
        throw ValidationError("volterra_deconvolve: series does not match the time grid");
    }
    if (options.epsilon && *options.epsilon < 0.0) {
        throw ValidationError("volterra_deconvolve: epsilon must be nonnegative");
    }
    if (options.noise_sigma < 0.0) {
        throw ValidationError("volterra_deconvolve: noise sigma must be nonnegative");
    }

    DeconvolutionResult out;
    out.q.assign(grid.size(), 0.0);
    if (std::all_of(psi.begin(), psi.end(), [](double v) { return v == 0.0; })) {
        out.unknowns = grid.steps;
        return out;
    }

    const std::size_t max_unknowns = std::max<std::size_t>(options.max_unknowns, 2);
    const std::size_t factor = (grid.steps + max_unknowns - 1) / max_unknowns;
    const std::size_t m = grid.steps / factor;
    const double step = grid.tau * static_cast<double>(factor);
    out.coarsening = factor;
    out.unknowns = m;

    const CellMoments moments = kernel_cell_moments(kernel, step, m, true);
    double mass = 0.0;
    for (double v : moments.mass) {
        mass += std::abs(v);
    }
    if (!(mass > 1e-10)) {
        throw IdentificationError("deconvolution",
                                  "kernel mass vanishes on the time window; the source is too far for this horizon");
    }
    Eigen::VectorXd data(static_cast<Eigen::Index>(m));
    for (std::size_t k = 1; k <= m; ++k) {
        data(static_cast<Eigen::Index>(k - 1)) = psi[k * factor];
    }
    const HatSystem sys = assemble(moments, std::move(data));
    const double scale = sys.gram.trace() / static_cast<double>(m + 1);
    const double floor = kFloorRatio * scale;

    Eigen::VectorXd x;
    if (options.epsilon) {
        out.epsilon = *options.epsilon;
        x = solve(sys, out.epsilon + floor, scale);
        out.residual_norm = residual(sys, x);
    } else {
        // Discrepancy principle: smallest epsilon with residual >= sigma sqrt(M).
        const double target = options.noise_sigma * std::sqrt(static_cast<double>(m));
        double lo = 0.0;
        Eigen::VectorXd x_lo = solve(sys, floor, scale);
        double r_lo = residual(sys, x_lo);
        if (target <= 0.0 || r_lo >= target) {
            x = std::move(x_lo);
            out.residual_norm = r_lo;
        } else {
            double log_lo = std::log(floor);
            double log_hi = std::log(1e6 * scale);
            Eigen::VectorXd x_hi = solve(sys, std::exp(log_hi), scale);
            double r_hi = residual(sys, x_hi);
            if (r_hi < target) {
                lo = std::exp(log_hi);
                x = std::move(x_hi);
                out.residual_norm = r_hi;
            } else {
                for (int it = 0; it < 60 && log_hi - log_lo > 1e-3; ++it) {
                    const double mid = 0.5 * (log_lo + log_hi);
                    Eigen::VectorXd xm = solve(sys, std::exp(mid), scale);
                    const double rm = residual(sys, xm);
                    if (rm >= target) {
                        log_hi = mid;
                        x_hi = std::move(xm);
                        r_hi = rm;
                    } else {
                        log_lo = mid;
                    }
                }
                lo = std::exp(log_hi);
                x = std::move(x_hi);
                out.residual_norm = r_hi;
            }
        }
        out.epsilon = lo;
    }
    out.seminorm = seminorm(x);

    // Hat coefficients live on the coarse nodes; interpolate to the fine grid.
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const std::size_t i = std::min(k / factor, m - 1);
        const double th = static_cast<double>(k - i * factor) / static_cast<double>(factor);
        const auto e = static_cast<Eigen::Index>(i);
        out.q[k] = k > m * factor ? x(static_cast<Eigen::Index>(m)) : (1.0 - th) * x(e) + th * x(e + 1);
    }
    return out;
}

}  // namespace ptsrc
