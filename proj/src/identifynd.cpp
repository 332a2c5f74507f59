#include "ptsrc/identifynd.hpp"

#include "ptsrc/forward.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace ptsrc {

namespace {

constexpr double kTruncationRatio = 1e-3;

double sensor_spread(std::span<const Point> pts) {
    double s = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            s = std::max(s, (pts[i] - pts[j]).norm());
        }
    }
    return s;
}

// Least-squares fit y = p0 + p1 x; returns (p0, p1, rms residual, stderr p0).
struct LineFit {
    double intercept, slope, rms, stderr_intercept;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd b(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        a(k, 0) = 1.0;
        a(k, 1) = x[static_cast<std::size_t>(k)];
        b(k) = y[static_cast<std::size_t>(k)];
    }
    const Eigen::Vector2d p = a.colPivHouseholderQr().solve(b);
    const double ss = (a * p - b).squaredNorm();
    LineFit f{p(0), p(1), std::sqrt(ss / static_cast<double>(n)), 0.0};
    if (n > 2) {
        const Eigen::Matrix2d cov = (a.transpose() * a).inverse() * (ss / static_cast<double>(n - 2));
        f.stderr_intercept = std::sqrt(std::max(cov(0, 0), 0.0));
    }
    return f;
}

double green_nd(int n, double r, double lambda, double reaction) {
    return green_laplace(n, r, lambda, reaction);
}

}  // namespace

GRatio g_ratio(const LaplaceSamples& phi_j, const LaplaceSamples& phi_i) {
    if (phi_j.lambdas != phi_i.lambdas) {
        throw IdentificationError("g_ratio", "transforms are not on a shared lambda grid");
    }
    GRatio g;
    g.lambdas = phi_i.lambdas;
    for (std::size_t k = 0; k < phi_i.size(); ++k) {
        const double den = phi_i.values[k];
        if (!(std::abs(den) > phi_i.truncation[k]) || den == 0.0) {
            throw IdentificationError("g_ratio", fmt::format("Phi_i({:.6g}) is below its truncation bound",
                                                             phi_i.lambdas[k]));
        }
        const double v = phi_j.values[k] / den;
        g.values.push_back(v);
        const double rel_j = phi_j.values[k] != 0.0 ? phi_j.truncation[k] / std::abs(phi_j.values[k]) : 0.0;
        g.bounds.push_back(std::abs(v) * (rel_j + phi_i.truncation[k] / std::abs(den)));
    }
    return g;
}

DifferenceFit distance_differences(const GRatio& g, double reaction) {
    DifferenceFit out;
    for (std::size_t k = 0; k + 1 < g.lambdas.size(); ++k) {
        const double a0 = std::sqrt(g.lambdas[k] + reaction);
        const double a1 = std::sqrt(g.lambdas[k + 1] + reaction);
        if (std::abs(a1 - a0 - 1.0) > 1e-9 * a1) {
            continue;
        }
        const double ratio = g.values[k] / g.values[k + 1];
        if (!(ratio > 0.0) || !std::isfinite(ratio)) {
            continue;
        }
        out.alphas.push_back(a0);
        out.ell.push_back(std::log(ratio));
    }
    if (out.alphas.size() < 3) {
        throw IdentificationError("distance_differences", "alpha ladder has fewer than 3 usable steps");
    }
    std::vector<double> inv(out.alphas.size());
    std::transform(out.alphas.begin(), out.alphas.end(), inv.begin(), [](double a) { return 1.0 / a; });
    const LineFit f = fit_line(inv, out.ell);
    out.d = f.intercept;
    out.slope = f.slope;
    out.residual = f.rms;
    out.uncertainty = f.stderr_intercept;
    return out;
}

DistancePair distances_from_ratio(double rho_eff, double d) {
    if (!std::isfinite(rho_eff) || std::abs(1.0 - rho_eff) < 1e-6) {
        throw IdentificationError("pairwise_distance_solve",
                                  "ratio is within 1e-6 of 1 for a nonzero difference; inputs are inconsistent");
    }
    DistancePair p;
    p.rho_eff = rho_eff;
    p.alpha_j = d / (1.0 - rho_eff);
    p.alpha_i = rho_eff * p.alpha_j;
    if (!(p.alpha_i > 0.0) || !(p.alpha_j > 0.0)) {
        throw IdentificationError("pairwise_distance_solve", "recovered distances are not positive");
    }
    return p;
}

DistancePair pairwise_distance_solve(int n, double g, double d, double lambda, double reaction) {
    if (n != 2 && n != 3) {
        throw ValidationError("pairwise_distance_solve: dimension must be 2 or 3");
    }
    const double exponent = std::sqrt(lambda + reaction) * d;
    if (exponent > 700.0 || !(g > 0.0)) {
        throw IdentificationError("pairwise_distance_solve", "G e^(sqrt(lambda) d) is out of floating-point range");
    }
    const double rho = g * std::exp(exponent);
    return distances_from_ratio(n == 3 ? rho : rho * rho, d);
}

Point circumcenter_case(std::span<const Point> sensors) {
    if (sensors.empty()) {
        throw IdentificationError("circumcenter_case", "no sensors");
    }
    const auto n = sensors.front().size();
    if (sensors.size() < static_cast<std::size_t>(n) + 1) {
        throw IdentificationError("circumcenter_case", "need at least n + 1 sensors");
    }
    const auto rows = static_cast<Eigen::Index>(sensors.size() - 1);
    Eigen::MatrixXd a(rows, n);
    Eigen::VectorXd b(rows);
    for (Eigen::Index k = 0; k < rows; ++k) {
        const Point& p = sensors[static_cast<std::size_t>(k + 1)];
        a.row(k) = 2.0 * (p - sensors[0]).transpose();
        b(k) = p.squaredNorm() - sensors[0].squaredNorm();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 1e-12 * sv(0)) {
        throw IdentificationError("circumcenter_case", "sensors form a degenerate simplex (condition (D) violated)");
    }
    return svd.solve(b);
}

Multilateration multilaterate(std::span<const Point> sensors, std::span<const double> alphas,
                              double inconsistency_tolerance) {
    if (sensors.size() != alphas.size() || sensors.empty()) {
        throw IdentificationError("multilaterate", "sensor and distance counts differ");
    }
    const auto n = sensors.front().size();
    if (sensors.size() < static_cast<std::size_t>(n) + 1) {
        throw IdentificationError("multilaterate", "need at least n + 1 sensors");
    }
    for (double a : alphas) {
        if (!(a > 0.0)) {
            throw IdentificationError("multilaterate", "distances must be positive");
        }
    }
    const auto rows = static_cast<Eigen::Index>(sensors.size() - 1);
    Eigen::MatrixXd a(rows, n);
    Eigen::VectorXd b(rows);
    for (Eigen::Index k = 0; k < rows; ++k) {
        const auto j = static_cast<std::size_t>(k + 1);
        a.row(k) = 2.0 * (sensors[j] - sensors[0]).transpose();
        b(k) = sensors[j].squaredNorm() - sensors[0].squaredNorm() - alphas[j] * alphas[j] + alphas[0] * alphas[0];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 1e-12 * sv(0)) {
        throw IdentificationError("multilaterate",
                                  "linearized system is rank deficient (condition (D) violated by the sensors)");
    }
    Multilateration out;
    out.condition_number = sv(0) / sv(sv.size() - 1);
    Point x = svd.solve(b);

    const auto m = static_cast<Eigen::Index>(sensors.size());
    for (out.iterations = 0; out.iterations < 50; ++out.iterations) {
        Eigen::MatrixXd jac(m, n);
        Eigen::VectorXd res(m);
        for (Eigen::Index k = 0; k < m; ++k) {
            const Point diff = x - sensors[static_cast<std::size_t>(k)];
            const double dist = diff.norm();
            res(k) = dist - alphas[static_cast<std::size_t>(k)];
            jac.row(k) = dist > 0.0 ? Eigen::RowVectorXd((diff / dist).transpose()) : Eigen::RowVectorXd::Zero(n);
        }
        const Eigen::VectorXd step = jac.colPivHouseholderQr().solve(-res);
        x += step;
        if (step.norm() <= 1e-15 * (1.0 + x.norm())) {
            break;
        }
    }
    double ss = 0.0;
    for (std::size_t k = 0; k < sensors.size(); ++k) {
        const double r = (x - sensors[k]).norm() - alphas[k];
        out.residuals.push_back(r);
        ss += r * r;
    }
    out.rms_residual = std::sqrt(ss / static_cast<double>(sensors.size()));
    const double scale = sensor_spread(sensors);
    out.inconsistent = std::any_of(out.residuals.begin(), out.residuals.end(),
                                   [&](double r) { return std::abs(r) > inconsistency_tolerance * scale; });
    out.x = std::move(x);
    return out;
}

RecoveryND locate_nd(std::span<const SensorRecord> records, int n, const LocateOptions& options) {
    if (n != 2 && n != 3) {
        throw ValidationError("locate_nd: dimension must be 2 or 3");
    }
    const std::size_t s = records.size();
    if (s < static_cast<std::size_t>(n) + 1) {
        throw IdentificationError("locate_nd", fmt::format("need at least {} sensors, got {}", n + 1, s));
    }
    std::vector<Point> sensors;
    for (const auto& r : records) {
        if (r.location.size() != n) {
            throw ValidationError("locate_nd: sensor dimension mismatch");
        }
        sensors.push_back(r.location);
    }
    RecoveryND out;
    out.dimension = n;
    out.condition_d = condition_D_check(sensors, n);
    if (!out.condition_d.holds) {
        std::string w;
        for (auto i : out.condition_d.witness) {
            w += (w.empty() ? "" : ", ") + std::to_string(i + 1);
        }
        throw IdentificationError("condition_D",
                                  fmt::format("condition (D) fails for sensors {{{}}}", w));
    }

    const TimeGrid& grid = records.front().grid;
    double lmin = 0.0;
    double lmax = 0.0;
    if (options.lambda_min && options.lambda_max) {
        lmin = *options.lambda_min;
        lmax = *options.lambda_max;
    } else {
        const LambdaAdvice adv = lambda_grid_advisor(grid, 0.5 * sensor_spread(sensors));
        lmin = options.lambda_min.value_or(adv.lambda_min);
        lmax = options.lambda_max.value_or(adv.lambda_max);
    }
    const double reaction = options.reaction;
    const auto a_lo = static_cast<long>(std::ceil(std::sqrt(std::max(lmin + reaction, 0.0))));
    const auto a_hi = static_cast<long>(std::floor(std::sqrt(lmax + reaction)));
    std::vector<double> lambdas;
    for (long a = std::max(a_lo, 1L); a <= a_hi; ++a) {
        const double lam = static_cast<double>(a * a) - reaction;
        if (lam > 0.0) {
            lambdas.push_back(lam);
            out.ladder.push_back(static_cast<double>(a));
        }
    }
    if (lambdas.size() < 4) {
        throw IdentificationError("locate_nd",
                                  fmt::format("lambda window [{:.6g}, {:.6g}] holds fewer than 4 integer alpha "
                                              "values; widen it",
                                              lmin, lmax));
    }

    std::vector<LaplaceSamples> phi;
    for (std::size_t j = 0; j < s; ++j) {
        if (records[j].grid.tau != grid.tau || records[j].grid.steps != grid.steps) {
            throw ValidationError("locate_nd: records use different time grids");
        }
        phi.push_back(laplace_grid(records[j].samples, grid, lambdas, fmt::format("psi_{}", j + 1)));
        for (std::size_t k = 0; k < lambdas.size(); ++k) {
            if (!phi.back().admissible(k, kTruncationRatio)) {
                out.diagnostics.push_back(fmt::format("sensor {}: truncation bound exceeds 1e-3 |Phi| at lambda "
                                                      "{:.6g}",
                                                      j + 1, lambdas[k]));
            }
        }
    }

    const auto si = static_cast<Eigen::Index>(s);
    out.d = Eigen::MatrixXd::Zero(si, si);
    out.uncertainty = Eigen::MatrixXd::Zero(si, si);
    const double scale = sensor_spread(sensors);
    bool degenerate = true;
    std::vector<std::vector<GRatio>> ratios(s, std::vector<GRatio>(s));
    for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t j = i + 1; j < s; ++j) {
            ratios[i][j] = g_ratio(phi[j], phi[i]);
            const DifferenceFit f = distance_differences(ratios[i][j], reaction);
            const double unc = std::max({f.uncertainty, 1e-12 * scale, 0.0});
            out.d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f.d;
            out.d(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = -f.d;
            out.uncertainty(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = unc;
            out.uncertainty(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = unc;
            const double threshold = std::max(3.0 * f.residual, 1e-6 * scale);
            if (std::abs(f.d) > threshold) {
                degenerate = false;
            }
            if (std::abs(f.d) > (sensors[i] - sensors[j]).norm() + 3.0 * unc) {
                out.diagnostics.push_back(fmt::format(
                    "pair ({}, {}): |d| = {:.6g} exceeds the sensor separation", i + 1, j + 1, std::abs(f.d)));
            }
        }
    }
    out.degenerate = degenerate;
    if (degenerate) {
        out.x1_hat = circumcenter_case(sensors);
        const double radius = (out.x1_hat - sensors[0]).norm();
        out.alphas.assign(s, radius);
        out.fit = multilaterate(sensors, out.alphas);
        out.x1_hat = out.fit.x;
        out.diagnostics.emplace_back("all distance differences vanish; source taken as the sensors' circumcenter");
        return out;
    }

    // The pair with the largest |d|, oriented so that d = alpha_j - alpha_i > 0.
    std::size_t bi = 0;
    std::size_t bj = 1;
    for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t j = 0; j < s; ++j) {
            if (out.d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) >
                out.d(static_cast<Eigen::Index>(bi), static_cast<Eigen::Index>(bj))) {
                bi = i;
                bj = j;
            }
        }
    }
    out.pair_i = bi;
    out.pair_j = bj;
    const double d0 = out.d(static_cast<Eigen::Index>(bi), static_cast<Eigen::Index>(bj));
    std::vector<double> inv_alpha;
    std::vector<double> rho;
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        const double a = out.ladder[k];
        const double g = bi < bj ? ratios[bi][bj].values[k] : 1.0 / ratios[bj][bi].values[k];
        const double exponent = a * d0;
        if (!(g > 0.0) || exponent > 700.0) {
            continue;
        }
        const double r = g * std::exp(exponent);
        inv_alpha.push_back(1.0 / a);
        rho.push_back(n == 3 ? r : r * r);
    }
    if (rho.size() < 3) {
        throw IdentificationError("pairwise_distance_solve", "fewer than 3 usable ratio samples");
    }
    const LineFit rf = fit_line(inv_alpha, rho);
    const DistancePair pair = distances_from_ratio(rf.intercept, d0);
    out.rho_eff = pair.rho_eff;

    // Propagate along minimum-variance difference chains from the solved pair.
    std::vector<double> alpha(s, NAN);
    std::vector<double> var(s, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    alpha[bi] = pair.alpha_i;
    alpha[bj] = pair.alpha_j;
    var[bi] = 0.0;
    var[bj] = 0.0;
    queue.push({0.0, bi});
    queue.push({0.0, bj});
    std::vector<bool> done(s, false);
    while (!queue.empty()) {
        const auto [v, u] = queue.top();
        queue.pop();
        if (done[u]) {
            continue;
        }
        done[u] = true;
        for (std::size_t k = 0; k < s; ++k) {
            if (done[k]) {
                continue;
            }
            const double unc = out.uncertainty(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(k));
            const double nv = v + unc * unc;
            if (nv < var[k]) {
                var[k] = nv;
                alpha[k] = alpha[u] + out.d(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(k));
                queue.push({nv, k});
            }
        }
    }
    out.alphas = alpha;
    for (std::size_t k = 0; k < s; ++k) {
        if (!(alpha[k] > 0.0)) {
            throw IdentificationError("distance_propagation",
                                      fmt::format("distance to sensor {} is not positive ({:.6g})", k + 1, alpha[k]));
        }
    }
    out.fit = multilaterate(sensors, out.alphas);
    out.x1_hat = out.fit.x;
    if (out.fit.inconsistent) {
        out.diagnostics.emplace_back("distance estimates are inconsistent with a single intersection point");
    }
    return out;
}

IntensityND recover_intensity_nd(std::span<const SensorRecord> records, std::span<const double> alphas, int n,
                                 double reaction, const DeconvolutionOptions& options, double spread_tolerance) {
    if (records.size() != alphas.size() || records.empty()) {
        throw IdentificationError("recover_intensity_nd", "record and distance counts differ");
    }
    IntensityND out;
    for (std::size_t j = 0; j < records.size(); ++j) {
        const double a = alphas[j];
        if (!(a > 0.0)) {
            throw IdentificationError("recover_intensity_nd", "distances must be positive");
        }
        const auto kernel = [=](double t) { return std::exp(-reaction * t) * heat_kernel(n, a, t); };
        out.per_sensor.push_back(volterra_deconvolve(records[j].samples, records[j].grid, kernel, options).q);
        if (alphas[j] < alphas[out.reference]) {
            out.reference = j;
        }
    }
    out.q = out.per_sensor[out.reference];
    const TimeGrid& grid = records[out.reference].grid;
    const auto k0 = static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(grid.steps)));
    double ref_norm = 0.0;
    for (std::size_t k = k0; k < grid.size(); ++k) {
        ref_norm += out.q[k] * out.q[k];
    }
    for (const auto& q : out.per_sensor) {
        double diff = 0.0;
        for (std::size_t k = k0; k < std::min(grid.size(), q.size()); ++k) {
            diff += (q[k] - out.q[k]) * (q[k] - out.q[k]);
        }
        if (ref_norm > 0.0) {
            out.spread = std::max(out.spread, std::sqrt(diff / ref_norm));
        } else if (diff > 0.0) {
            out.spread = std::numeric_limits<double>::infinity();
        }
    }
    out.flagged = out.spread > spread_tolerance;
    return out;
}

std::vector<Point> bisector_probes(int n) {
    std::vector<Point> probes;
    if (n == 3) {
        for (double y : {-1.5, -0.5, 0.5, 1.5, 2.5}) {
            for (double z : {-1.0, 0.0, 1.0, 2.0}) {
                Point p(3);
                p << 0.0, y, z;
                probes.push_back(p);
            }
        }
    } else if (n == 2) {
        for (int k = 0; k < 20; ++k) {
            Point p(2);
            p << 0.0, -2.0 + 0.25 * k + 0.125;
            probes.push_back(p);
        }
    } else {
        throw ValidationError("bisector_probes: dimension must be 2 or 3");
    }
    return probes;
}

std::vector<ExampleRow> nonuniqueness_example1(int n, double a, std::span<const Point> probes,
                                               std::span<const double> lambdas) {
    if (n != 2 && n != 3) {
        throw ValidationError("nonuniqueness_example1: dimension must be 2 or 3");
    }
    Point x1 = Point::Zero(n);
    Point x2 = Point::Zero(n);
    x1(0) = a;
    x2(0) = -a;
    std::vector<ExampleRow> rows;
    for (std::size_t p = 0; p < probes.size(); ++p) {
        const double r1 = (probes[p] - x1).norm();
        const double r2 = (probes[p] - x2).norm();
        if (r1 == 0.0 || r2 == 0.0) {
            throw ValidationError("nonuniqueness_example1: probe coincides with a source");
        }
        for (double lam : lambdas) {
            const double g1 = green_nd(n, r1, lam, 0.0);
            const double g2 = green_nd(n, r2, lam, 0.0);
            rows.push_back({fmt::format("p{}", p + 1), probes[p], lam, std::abs(g1 - g2), std::abs(g1)});
        }
    }
    return rows;
}

std::vector<Point> example2_sensors(double m) {
    std::vector<Point> pts;
    for (int axis = 0; axis < 3; ++axis) {
        for (double sgn : {1.0, -1.0}) {
            Point p = Point::Zero(3);
            p(axis) = sgn * m;
            pts.push_back(p);
        }
    }
    return pts;
}

std::vector<ExampleRow> nonuniqueness_example2(double a, double m, std::span<const double> lambdas,
                                               std::span<const Point> extra_probes) {
    const auto pt = [](double x, double y) {
        Point p(3);
        p << x, y, 0.0;
        return p;
    };
    const std::vector<Point> first{pt(a, a), pt(-a, -a)};
    const std::vector<Point> second{pt(a, -a), pt(-a, a)};
    const auto u_hat = [](const std::vector<Point>& src, const Point& x, double lam) {
        double u = 0.0;
        for (const auto& s : src) {
            const double r = (x - s).norm();
            if (r == 0.0) {
                throw ValidationError("nonuniqueness_example2: probe coincides with a source");
            }
            u += green_laplace(3, r, lam);
        }
        return u;
    };
    std::vector<Point> probes = example2_sensors(m);
    std::vector<std::string> labels{"b1", "b2", "b3", "b4", "b5", "b6"};
    for (std::size_t k = 0; k < extra_probes.size(); ++k) {
        if (extra_probes[k].size() != 3) {
            throw ValidationError("nonuniqueness_example2: probes must be 3D points");
        }
        probes.push_back(extra_probes[k]);
        labels.push_back(fmt::format("extra{}", k + 1));
    }
    std::vector<ExampleRow> rows;
    for (std::size_t p = 0; p < probes.size(); ++p) {
        for (double lam : lambdas) {
            const double u1 = u_hat(first, probes[p], lam);
            const double u2 = u_hat(second, probes[p], lam);
            rows.push_back({labels[p], probes[p], lam, std::abs(u1 - u2), std::abs(u1)});
        }
    }
    return rows;
}

}  // namespace ptsrc
