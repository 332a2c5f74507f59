#include "ptsrc/identifynd.hpp"
#include "ptsrc/quadrature.hpp"

#include <cmath>

namespace ptsrc {

ConditionD condition_D_check(std::span<const Point> points, int n) {
    if (n != 2 && n != 3) {
        throw ValidationError("condition_D_check: dimension must be 2 or 3");
    }
    for (const auto& p : points) {
        if (p.size() != n) {
            throw ValidationError("condition_D_check: point dimension mismatch");
        }
    }
    double scale = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            scale = std::max(scale, (points[i] - points[j]).norm());
        }
    }
    ConditionD out;
    const std::size_t m = points.size();
    if (n == 2) {
        const double tol = 1e-12 * scale * scale;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i + 1; j < m; ++j) {
                for (std::size_t k = j + 1; k < m; ++k) {
                    const Eigen::Vector2d u = points[j] - points[i];
                    const Eigen::Vector2d v = points[k] - points[i];
                    if (std::abs(u(0) * v(1) - u(1) * v(0)) <= tol) {
                        return {false, {i, j, k}};
                    }
                }
            }
        }
        return out;
    }
    const double tol = 1e-12 * scale * scale * scale;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            for (std::size_t k = j + 1; k < m; ++k) {
                for (std::size_t l = k + 1; l < m; ++l) {
                    Eigen::Matrix3d a;
                    a.col(0) = points[j] - points[i];
                    a.col(1) = points[k] - points[i];
                    a.col(2) = points[l] - points[i];
                    if (std::abs(a.determinant()) <= tol) {
                        return {false, {i, j, k, l}};
                    }
                }
            }
        }
    }
    return out;
}

A0Matrix build_A0(std::span<const Point> sources, std::span<const Point> sensors, const DriftFieldND& drift,
                  double tie_tolerance) {
    const DistanceTable table = sensor_source_distances(sources, sensors, tie_tolerance);
    const auto r = static_cast<Eigen::Index>(sources.size());
    const auto s = static_cast<Eigen::Index>(sensors.size());
    A0Matrix out;
    out.entries = Eigen::MatrixXd::Zero(s, r);
    out.phi = Eigen::MatrixXd::Zero(s, r);
    for (Eigen::Index j = 0; j < s; ++j) {
        const Point& b = sensors[static_cast<std::size_t>(j)];
        for (Eigen::Index i = 0; i < r; ++i) {
            const Point seg = sources[static_cast<std::size_t>(i)] - b;
            const auto integrand = [&](double t) {
                const Point y = b + t * seg;
                return drift.at(y).dot(seg);
            };
            out.phi(j, i) = -0.5 * quad::gauss(integrand, 0.0, 1.0, 16);
        }
        for (std::size_t i : table.argmin[static_cast<std::size_t>(j)]) {
            const auto ii = static_cast<Eigen::Index>(i);
            out.entries(j, ii) = std::exp(out.phi(j, ii));
        }
    }
    out.square = r == s;
    if (out.square) {
        const double det = out.entries.partialPivLu().determinant();
        out.determinant = det;
        out.singular = std::abs(det) <= 1e-10 * out.entries.norm();
    }
    return out;
}

bool sufficiency_check(std::size_t r, std::size_t s, int n) {
    if (n != 2 && n != 3) {
        throw ValidationError("sufficiency_check: dimension must be 2 or 3");
    }
    if (r < 1) {
        throw ValidationError("sufficiency_check: source bound must be at least 1");
    }
    return n == 2 ? s >= 2 * r + 1 : s >= 3 * r + 1;
}

}  // namespace ptsrc
