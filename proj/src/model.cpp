#include "ptsrc/model.hpp"

#include "ptsrc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ptsrc {

int dimension_of(const SpatialDomain& domain) {
    if (const auto* fs = std::get_if<FreeSpace>(&domain)) {
        return fs->dimension;
    }
    return 1;
}

// ---------------------------------------------------------------------------
// CoefficientField1D

namespace {

std::vector<double> broadcast(std::vector<double> v, std::size_t n, const char* name) {
    if (v.size() == 1) {
        return std::vector<double>(n, v.front());
    }
    if (v.size() != n) {
        throw ValidationError(std::string("coefficients.") + name + ": sample count mismatch");
    }
    return v;
}

std::vector<double> fd_slopes(const std::vector<double>& f, double h) {
    const std::size_t n = f.size();
    std::vector<double> m(n, 0.0);
    if (n == 2) {
        m[0] = m[1] = (f[1] - f[0]) / h;
        return m;
    }
    m[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    m[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        m[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    }
    return m;
}

constexpr double kCellTolerance = 1e-13;

}  // namespace

CoefficientField1D::CoefficientField1D(double a, double b, std::vector<double> a2, std::vector<double> a1,
                                       std::vector<double> a0, int degree)
    : a_(a), b_(b), degree_(degree) {
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) {
        throw ValidationError("coefficients.grid: need finite a < b");
    }
    if (degree != 1 && degree != 3) {
        throw ValidationError("coefficients.degree: must be 1 or 3");
    }
    const std::size_t n = std::max({a2.size(), a1.size(), a0.size(), std::size_t{2}});
    a2_ = broadcast(std::move(a2), n, "a2");
    a1_ = broadcast(std::move(a1), n, "a1");
    a0_ = broadcast(std::move(a0), n, "a0");
    h_ = (b_ - a_) / static_cast<double>(n - 1);

    c2_ = {a2_, fd_slopes(a2_, h_)};
    c1_ = {a1_, fd_slopes(a1_, h_)};
    c0_ = {a0_, fd_slopes(a0_, h_)};

    auto [lo, hi] = std::minmax_element(a2_.begin(), a2_.end());
    m1_ = *lo;
    m2_ = *hi;
    const bool finite = std::all_of(a2_.begin(), a2_.end(), [](double v) { return std::isfinite(v); }) &&
                        std::all_of(a1_.begin(), a1_.end(), [](double v) { return std::isfinite(v); });
    if (!finite) {
        m1_ = std::min(m1_, 0.0);
    }
    if (!elliptic()) {
        return;
    }

    cum_r_.assign(n, 0.0);
    cum_r1_.assign(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double x0 = a_ + h_ * static_cast<double>(i);
        const double x1 = (i + 2 == n) ? b_ : x0 + h_;
        cum_r_[i + 1] = cum_r_[i] + quad::adaptive_simpson([this](double x) { return r(x); }, x0, x1,
                                                           kCellTolerance, 0.0);
        cum_r1_[i + 1] = cum_r1_[i] + quad::adaptive_simpson([this](double x) { return r1(x); }, x0, x1,
                                                             kCellTolerance, 0.0);
    }
}

CoefficientField1D CoefficientField1D::constant(double a, double b, double a2, double a1, double a0) {
    return CoefficientField1D(a, b, {a2}, {a1}, {a0}, 3);
}

bool CoefficientField1D::a2_is_constant() const {
    return (m2_ - m1_) <= 1e-14 * std::max(std::abs(m1_), std::abs(m2_));
}

std::pair<std::size_t, double> CoefficientField1D::locate(double x) const {
    const double xc = std::clamp(x, a_, b_);
    const std::size_t last = a2_.size() - 2;
    const auto i = std::min(static_cast<std::size_t>(std::floor((xc - a_) / h_)), last);
    const double t = (xc - (a_ + h_ * static_cast<double>(i))) / h_;
    return {i, t};
}

double CoefficientField1D::eval(const Channel& c, double x) const {
    auto [i, t] = locate(x);
    const double f0 = c.values[i];
    const double f1 = c.values[i + 1];
    if (degree_ == 1) {
        return f0 + t * (f1 - f0);
    }
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * h_ * c.slopes[i] + (-2 * t3 + 3 * t2) * f1 +
           (t3 - t2) * h_ * c.slopes[i + 1];
}

double CoefficientField1D::eval_derivative(const Channel& c, double x) const {
    auto [i, t] = locate(x);
    const double f0 = c.values[i];
    const double f1 = c.values[i + 1];
    if (degree_ == 1) {
        return (f1 - f0) / h_;
    }
    const double t2 = t * t;
    return ((6 * t2 - 6 * t) * f0 + (3 * t2 - 4 * t + 1) * h_ * c.slopes[i] + (-6 * t2 + 6 * t) * f1 +
            (3 * t2 - 2 * t) * h_ * c.slopes[i + 1]) /
           h_;
}

double CoefficientField1D::a2(double x) const { return eval(c2_, x); }
double CoefficientField1D::a2_prime(double x) const { return eval_derivative(c2_, x); }
double CoefficientField1D::a1(double x) const { return eval(c1_, x); }
double CoefficientField1D::a0(double x) const { return eval(c0_, x); }

void CoefficientField1D::require_elliptic() const {
    if (!elliptic()) {
        throw ValidationError("coefficients.a2: ellipticity M1>0 violated");
    }
}

double CoefficientField1D::r(double x) const {
    require_elliptic();
    return 1.0 / std::sqrt(a2(x));
}

double CoefficientField1D::r1(double x) const {
    require_elliptic();
    const double v = a2(x);
    return a2_prime(x) / (4.0 * v) + a1(x) / (2.0 * v);
}

namespace {

double cumulative_at(const std::vector<double>& cum, double a, double h, std::size_t n, double x,
                     const std::function<double(double)>& f) {
    const std::size_t last = n - 2;
    const auto i = std::min(static_cast<std::size_t>(std::floor((x - a) / h)), last);
    const double xi = a + h * static_cast<double>(i);
    return cum[i] + quad::adaptive_simpson(f, xi, x, kCellTolerance, 0.0);
}

}  // namespace

double CoefficientField1D::integral_r(double x0, double x1) const {
    require_elliptic();
    const auto f = [this](double x) { return r(x); };
    const double lo = std::clamp(x0, a_, b_);
    const double hi = std::clamp(x1, a_, b_);
    return cumulative_at(cum_r_, a_, h_, a2_.size(), hi, f) - cumulative_at(cum_r_, a_, h_, a2_.size(), lo, f);
}

double CoefficientField1D::integral_r1(double x0, double x1) const {
    require_elliptic();
    const auto f = [this](double x) { return r1(x); };
    const double lo = std::clamp(x0, a_, b_);
    const double hi = std::clamp(x1, a_, b_);
    return cumulative_at(cum_r1_, a_, h_, a2_.size(), hi, f) -
           cumulative_at(cum_r1_, a_, h_, a2_.size(), lo, f);
}

// ---------------------------------------------------------------------------
// DriftFieldND, sources

DriftFieldND DriftFieldND::zero(int n) {
    return {n, Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n)};
}

Eigen::VectorXd DriftFieldND::at(const Point& x) const {
    Eigen::VectorXd v = constant;
    if (gradient.size() > 0) {
        v += gradient * x;
    }
    return v;
}

bool DriftFieldND::is_zero() const {
    return constant.isZero(0.0) && (gradient.size() == 0 || gradient.isZero(0.0));
}

std::vector<double> PointSource::sample(const TimeGrid& grid) const {
    if (const auto* c = std::get_if<ConstantIntensity>(&intensity)) {
        return std::vector<double>(grid.size(), c->q);
    }
    const auto& s = std::get<SampledIntensity>(intensity);
    if (s.values.size() != grid.size()) {
        throw ValidationError("sources.intensity: sampled series length does not match the time grid");
    }
    return s.values;
}

bool Background::is_zero() const {
    return f0 == 0.0 && std::all_of(u0.begin(), u0.end(), [](double v) { return v == 0.0; });
}

// ---------------------------------------------------------------------------
// validation

namespace {

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_bc(const BoundaryCondition& bc, const char* side, const TimeGrid& grid,
              std::vector<std::string>& out) {
    const TimeSeriesValue* g = nullptr;
    if (const auto* d = std::get_if<Dirichlet>(&bc)) {
        g = &d->g;
    } else {
        const auto& rb = std::get<Robin>(bc);
        g = &rb.g;
        if (!std::isfinite(rb.sigma)) {
            out.push_back(std::string("domain.") + side + ".sigma: must be finite");
        }
    }
    if (g->values.empty() || (!g->is_constant() && g->values.size() != grid.size())) {
        out.push_back(std::string("domain.") + side + ".g: must be a constant or sampled on the time grid");
    }
    if (!all_finite(g->values)) {
        out.push_back(std::string("domain.") + side + ".g: non-finite sample");
    }
}

}  // namespace

std::vector<std::string> validate_scenario(const Scenario& s) {
    std::vector<std::string> out;
    const int n = s.dimension();

    if (!(s.grid.tau > 0.0) || !std::isfinite(s.grid.tau)) {
        out.emplace_back("time.tau: time step must be positive");
    }
    if (s.grid.steps < 2) {
        out.emplace_back("time.steps: need at least 2 steps");
    }

    const Interval1D* interval = std::get_if<Interval1D>(&s.domain);
    if (interval) {
        if (!std::isfinite(interval->a) || !std::isfinite(interval->b) || !(interval->a < interval->b)) {
            out.emplace_back("domain: interval needs finite a < b");
        }
        check_bc(interval->left, "left", s.grid, out);
        check_bc(interval->right, "right", s.grid, out);
        if (!s.coefficients) {
            out.emplace_back("coefficients: required for an interval domain");
        }
    } else {
        const auto& fs = std::get<FreeSpace>(s.domain);
        if (fs.dimension < 1 || fs.dimension > 3) {
            out.emplace_back("domain.dimension: must be 1, 2 or 3");
        }
        if (!(fs.reaction >= 0.0) || !std::isfinite(fs.reaction)) {
            out.emplace_back("domain.reaction: must be a finite nonnegative scalar");
        }
    }

    if (s.coefficients) {
        const auto& c = *s.coefficients;
        if (!c.elliptic()) {
            out.emplace_back("coefficients.a2: ellipticity M1>0 violated");
        }
        if (!all_finite(c.a1_samples()) || !all_finite(c.a0_samples())) {
            out.emplace_back("coefficients: non-finite a1 or a0 sample");
        }
        if (interval) {
            const double tol = 1e-12 * (interval->b - interval->a);
            if (c.left() > interval->a + tol || c.right() < interval->b - tol) {
                out.emplace_back("coefficients.grid: must cover the interval [a, b]");
            }
        }
    }

    if (s.drift) {
        if (s.drift->dimension != n || s.drift->constant.size() != n ||
            (s.drift->gradient.size() > 0 && (s.drift->gradient.rows() != n || s.drift->gradient.cols() != n))) {
            out.emplace_back("drift: dimension does not match the domain");
        } else if (!s.drift->constant.allFinite() || !s.drift->gradient.allFinite()) {
            out.emplace_back("drift: non-finite component");
        }
    }

    const auto inside = [&](const Point& p, bool closed) {
        if (p.size() != n || !p.allFinite()) {
            return false;
        }
        if (!interval) {
            return true;
        }
        return closed ? (p[0] >= interval->a && p[0] <= interval->b) : (p[0] > interval->a && p[0] < interval->b);
    };

    for (std::size_t i = 0; i < s.sources.size(); ++i) {
        const auto& src = s.sources[i];
        const std::string tag = "sources[" + std::to_string(i) + "]";
        if (!inside(src.location, false)) {
            out.push_back(tag + ".location: must be a point strictly inside the domain");
        }
        if (const auto* smp = std::get_if<SampledIntensity>(&src.intensity)) {
            if (smp->values.size() != s.grid.size()) {
                out.push_back(tag + ".intensity: sampled series must have one value per time node");
            } else if (!all_finite(smp->values)) {
                out.push_back(tag + ".intensity: non-finite sample");
            }
        } else if (!std::isfinite(std::get<ConstantIntensity>(src.intensity).q)) {
            out.push_back(tag + ".intensity: non-finite constant");
        }
    }

    if (s.sensors.empty()) {
        out.emplace_back("sensors: at least one sensor is required");
    }
    for (std::size_t j = 0; j < s.sensors.size(); ++j) {
        const std::string tag = "sensors[" + std::to_string(j) + "]";
        if (!inside(s.sensors[j], true)) {
            out.push_back(tag + ": must lie in the (closed) domain with matching dimension");
            continue;
        }
        for (std::size_t k = j + 1; k < s.sensors.size(); ++k) {
            if (s.sensors[k].size() == n && (s.sensors[j] - s.sensors[k]).norm() == 0.0) {
                out.push_back("sensors: duplicated location at indices " + std::to_string(j) + " and " +
                              std::to_string(k));
            }
        }
        for (std::size_t i = 0; i < s.sources.size(); ++i) {
            if (s.sources[i].location.size() == n && (s.sources[i].location - s.sensors[j]).norm() == 0.0) {
                out.push_back(tag + ": coincides with sources[" + std::to_string(i) + "]");
            }
        }
    }

    if (!(s.noise.sigma >= 0.0) || !std::isfinite(s.noise.sigma)) {
        out.emplace_back("noise.sigma: must be a finite nonnegative scalar");
    }

    if (s.background.u0.empty() || !all_finite(s.background.u0) || !std::isfinite(s.background.f0)) {
        out.emplace_back("background: u0 and f0 must be finite");
    } else if (!interval && s.background.u0.size() != 1) {
        out.emplace_back("background.u0: free-space backgrounds must be spatially constant");
    }

    if (s.fd_spacing) {
        if (!interval) {
            out.emplace_back("solver.h: finite-difference spacing only applies to interval domains");
        } else if (!(*s.fd_spacing > 0.0) || *s.fd_spacing > 0.5 * (interval->b - interval->a)) {
            out.emplace_back("solver.h: spacing must be positive and at most half the interval");
        }
    }
    return out;
}

DistanceTable sensor_source_distances(std::span<const Point> sources, std::span<const Point> sensors,
                                      double tie_tolerance) {
    if (sources.empty() || sensors.empty()) {
        throw ValidationError("sensor_source_distances: need nonempty source and sensor lists");
    }
    const auto dim = sources.front().size();
    for (const auto& p : sources) {
        if (p.size() != dim) throw ValidationError("sensor_source_distances: dimension mismatch");
    }
    for (const auto& p : sensors) {
        if (p.size() != dim) throw ValidationError("sensor_source_distances: dimension mismatch");
    }

    DistanceTable t;
    const auto ns = static_cast<Eigen::Index>(sources.size());
    const auto nb = static_cast<Eigen::Index>(sensors.size());
    t.r.resize(ns, nb);
    t.delta.resize(nb);
    t.argmin.resize(sensors.size());
    for (Eigen::Index j = 0; j < nb; ++j) {
        for (Eigen::Index i = 0; i < ns; ++i) {
            t.r(i, j) = (sources[i] - sensors[j]).norm();
        }
        const double d = t.r.col(j).minCoeff();
        t.delta[j] = d;
        for (Eigen::Index i = 0; i < ns; ++i) {
            if (t.r(i, j) - d <= tie_tolerance * std::max(d, std::numeric_limits<double>::min())) {
                t.argmin[j].push_back(static_cast<std::size_t>(i));
            }
        }
    }
    return t;
}

}  // namespace ptsrc
