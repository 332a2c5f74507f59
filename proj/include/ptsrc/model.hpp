#pragma once

// Domain, coefficient, source, sensor and scenario types shared by the
// forward solvers and the identification pipelines.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ptsrc {

using Point = Eigen::VectorXd;

/// Raised when a scenario or an input object breaks a stated invariant.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised by forward solvers (bad discretization, unsupported configuration).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by identification stages; carries the name of the failing stage.
class IdentificationError : public std::runtime_error {
public:
    IdentificationError(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// Uniform time grid t_k = k * tau, k = 0..steps. The horizon is steps * tau.
struct TimeGrid {
    double tau = 0.0;
    std::size_t steps = 0;

    double horizon() const { return tau * static_cast<double>(steps); }
    std::size_t size() const { return steps + 1; }
    double time(std::size_t k) const { return tau * static_cast<double>(k); }
    bool valid() const { return tau > 0.0 && steps >= 2; }
};

/// A scalar function of time given either as one constant value or as
/// samples on the scenario time grid.
struct TimeSeriesValue {
    std::vector<double> values{0.0};

    double at(std::size_t k) const { return values.size() == 1 ? values.front() : values.at(k); }
    bool is_constant() const { return values.size() == 1; }
};

struct Dirichlet {
    TimeSeriesValue g;
};

/// u_x + sigma * u = g at the boundary point.
struct Robin {
    double sigma = 0.0;
    TimeSeriesValue g;
};

using BoundaryCondition = std::variant<Dirichlet, Robin>;

struct Interval1D {
    double a = 0.0;
    double b = 1.0;
    BoundaryCondition left = Dirichlet{};
    BoundaryCondition right = Dirichlet{};
};

/// R^n with operator -Laplacian + reaction.
struct FreeSpace {
    int dimension = 3;
    double reaction = 0.0;
};

using SpatialDomain = std::variant<Interval1D, FreeSpace>;

int dimension_of(const SpatialDomain& domain);

/// Sampled a2, a1, a0 on a uniform grid over [a, b] with piecewise-cubic
/// Hermite interpolation (degree 3) or piecewise-linear (degree 1).
///
/// Construction never rejects non-elliptic data so that validation can
/// report it; every query that needs r = 1/sqrt(a2) throws instead.
class CoefficientField1D {
public:
    CoefficientField1D(double a, double b, std::vector<double> a2, std::vector<double> a1,
                       std::vector<double> a0, int degree = 3);

    static CoefficientField1D constant(double a, double b, double a2, double a1 = 0.0,
                                       double a0 = 0.0);

    double left() const { return a_; }
    double right() const { return b_; }
    int degree() const { return degree_; }
    std::size_t nodes() const { return a2_.size(); }
    const std::vector<double>& a2_samples() const { return a2_; }
    const std::vector<double>& a1_samples() const { return a1_; }
    const std::vector<double>& a0_samples() const { return a0_; }

    double min_a2() const { return m1_; }
    double max_a2() const { return m2_; }
    bool elliptic() const { return m1_ > 0.0; }
    bool a2_is_constant() const;

    double a2(double x) const;
    double a2_prime(double x) const;
    double a1(double x) const;
    double a0(double x) const;

    /// r = 1 / sqrt(a2).
    double r(double x) const;
    /// r1 = -(a2 r' r - a1 r^2) / 2 = a2' / (4 a2) + a1 / (2 a2).
    double r1(double x) const;

    /// Signed integral of r from x0 to x1 (adaptive Simpson per grid cell).
    double integral_r(double x0, double x1) const;
    double integral_r1(double x0, double x1) const;

private:
    struct Channel {
        std::vector<double> values;
        std::vector<double> slopes;
    };

    double eval(const Channel& c, double x) const;
    double eval_derivative(const Channel& c, double x) const;
    std::pair<std::size_t, double> locate(double x) const;
    void require_elliptic() const;

    double a_;
    double b_;
    double h_;
    int degree_;
    std::vector<double> a2_, a1_, a0_;
    Channel c2_, c1_, c0_;
    double m1_ = 0.0;
    double m2_ = 0.0;
    std::vector<double> cum_r_;
    std::vector<double> cum_r1_;
};

/// Drift vector field a(x) = constant + gradient * x on R^n.
struct DriftFieldND {
    int dimension = 3;
    Eigen::VectorXd constant;
    Eigen::MatrixXd gradient;

    static DriftFieldND zero(int n);
    Eigen::VectorXd at(const Point& x) const;
    bool is_zero() const;
};

struct ConstantIntensity {
    double q = 0.0;
};

struct SampledIntensity {
    std::vector<double> values;
};

using Intensity = std::variant<ConstantIntensity, SampledIntensity>;

struct PointSource {
    Point location;
    Intensity intensity = ConstantIntensity{1.0};

    /// Intensity samples on the grid (constant intensities are broadcast).
    std::vector<double> sample(const TimeGrid& grid) const;
};

struct SensorRecord {
    Point location;
    std::vector<double> samples;
    TimeGrid grid;
};

struct NoiseModel {
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

/// Background data of the direct problem: constant-or-sampled initial state
/// and a constant volumetric source f0.
struct Background {
    std::vector<double> u0{0.0};
    double f0 = 0.0;

    bool is_zero() const;
};

/// Identification settings that may be stored alongside a scenario.
struct IdentificationSettings {
    std::optional<double> lambda_min;
    std::optional<double> lambda_max;
    std::optional<std::size_t> lambda_points;
    std::optional<double> epsilon;
    bool epsilon_auto = false;  ///< discrepancy principle instead of a fixed epsilon
};

struct Scenario {
    SpatialDomain domain = FreeSpace{};
    std::optional<CoefficientField1D> coefficients;
    std::optional<DriftFieldND> drift;
    std::vector<PointSource> sources;
    std::vector<Point> sensors;
    TimeGrid grid;
    NoiseModel noise;
    Background background;
    std::optional<double> fd_spacing;
    IdentificationSettings identification;

    int dimension() const { return dimension_of(domain); }
};

/// Lists every broken invariant as "field: message". Empty means valid.
std::vector<std::string> validate_scenario(const Scenario& s);

struct DistanceTable {
    Eigen::MatrixXd r;                          ///< r(i, j) = |x_i - b_j|
    Eigen::VectorXd delta;                      ///< delta_j = min_i r(i, j)
    std::vector<std::vector<std::size_t>> argmin;  ///< sources attaining delta_j
};

/// Pairwise source-sensor distances with nearest-source sets. Every source
/// within relative `tie_tolerance` of delta_j is kept in the argmin set.
DistanceTable sensor_source_distances(std::span<const Point> sources, std::span<const Point> sensors,
                                      double tie_tolerance = 1e-9);

}  // namespace ptsrc
