#pragma once

// Two- and three-dimensional single-source localization from Laplace ratios
// of sensor series, intensity recovery, and identifiability diagnostics.

#include "ptsrc/laplace.hpp"
#include "ptsrc/model.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ptsrc {

struct GRatio {
    std::vector<double> lambdas;
    std::vector<double> values;  ///< Phi_j / Phi_i
    std::vector<double> bounds;  ///< propagated truncation bound
};

/// G_ij = Phi_j / Phi_i on the shared grid.
GRatio g_ratio(const LaplaceSamples& phi_j, const LaplaceSamples& phi_i);

struct DifferenceFit {
    double d = 0.0;            ///< extrapolated alpha_j - alpha_i
    double slope = 0.0;        ///< c in l(alpha) = d + c / alpha
    double residual = 0.0;     ///< RMS fit residual
    double uncertainty = 0.0;  ///< standard error of d
    std::vector<double> alphas;
    std::vector<double> ell;
};

/// l(alpha) = ln(G(alpha^2) / G((alpha + 1)^2)) on consecutive ladder steps
/// (alpha = sqrt(lambda + reaction)), fitted as d + c / alpha.
DifferenceFit distance_differences(const GRatio& g, double reaction = 0.0);

struct DistancePair {
    double alpha_i = 0.0;
    double alpha_j = 0.0;
    double rho_eff = 0.0;
};

/// Closed-form distances from rho_eff = alpha_i / alpha_j and d = alpha_j - alpha_i.
DistancePair distances_from_ratio(double rho_eff, double d);

/// rho = G e^(sqrt(lambda + reaction) d) read as alpha_i / alpha_j (n = 3) or
/// its square root (n = 2).
DistancePair pairwise_distance_solve(int n, double g, double d, double lambda, double reaction = 0.0);

/// Center of the circle (n = 2) or sphere (n = 3) through the sensors; least
/// squares when more than n + 1 sensors are given.
Point circumcenter_case(std::span<const Point> sensors);

struct Multilateration {
    Point x;
    std::vector<double> residuals;  ///< |x - b_j| - alpha_j
    double rms_residual = 0.0;
    double condition_number = 0.0;
    bool inconsistent = false;
    int iterations = 0;
};

/// Linearized sphere intersection followed by Gauss-Newton on
/// sum (|x - b_j| - alpha_j)^2. `inconsistency_tolerance` is relative to the
/// sensor spread.
Multilateration multilaterate(std::span<const Point> sensors, std::span<const double> alphas,
                              double inconsistency_tolerance = 1e-2);

struct LocateOptions {
    std::optional<double> lambda_min;
    std::optional<double> lambda_max;
    double reaction = 0.0;
};

struct ConditionD {
    bool holds = true;
    std::vector<std::size_t> witness;  ///< indices of a collinear triple or coplanar quadruple
};

struct RecoveryND {
    Point x1_hat;
    int dimension = 3;
    std::vector<double> alphas;
    Eigen::MatrixXd d;            ///< d(i, j) = alpha_j - alpha_i
    Eigen::MatrixXd uncertainty;
    bool degenerate = false;
    std::size_t pair_i = 0;
    std::size_t pair_j = 0;
    double rho_eff = 0.0;
    std::vector<double> ladder;   ///< alpha values used
    ConditionD condition_d;
    Multilateration fit;
    std::vector<std::string> diagnostics;
};

/// Full pipeline on background-free records: transforms on an integer alpha
/// ladder, pairwise distance differences, one pairwise distance solve,
/// propagation along minimum-variance difference chains, multilateration.
RecoveryND locate_nd(std::span<const SensorRecord> records, int n, const LocateOptions& options = {});

struct IntensityND {
    std::vector<std::vector<double>> per_sensor;
    std::vector<double> q;       ///< from the sensor with the smallest alpha
    std::size_t reference = 0;
    double spread = 0.0;         ///< max relative L2 gap to the reference on [0.1 T, T]
    bool flagged = false;        ///< spread above `spread_tolerance`
};

/// Deconvolves each record by e^(-reaction t) G_n(alpha_j, t).
IntensityND recover_intensity_nd(std::span<const SensorRecord> records, std::span<const double> alphas, int n,
                                 double reaction = 0.0, const DeconvolutionOptions& options = {},
                                 double spread_tolerance = 0.1);

/// No three points collinear (n = 2) or four coplanar (n = 3), with
/// tolerance 1e-12 scale^(n) on the area/volume determinant.
ConditionD condition_D_check(std::span<const Point> points, int n);

struct A0Matrix {
    Eigen::MatrixXd entries;  ///< entries(j, i): sensor j, source i
    Eigen::MatrixXd phi;      ///< phi_j(x_i)
    bool square = false;
    std::optional<double> determinant;
    bool singular = false;
};

/// phi_j(x) = -1/2 int_0^1 (a(b_j + s (x - b_j)), x - b_j) ds and
/// a_ji = exp(phi_j(x_i)) when x_i is a nearest source of b_j, else 0.
A0Matrix build_A0(std::span<const Point> sources, std::span<const Point> sensors, const DriftFieldND& drift,
                  double tie_tolerance = 1e-9);

/// s >= 2 r + 1 (n = 2) or s >= 3 r + 1 (n = 3).
bool sufficiency_check(std::size_t r, std::size_t s, int n);

struct ExampleRow {
    std::string probe_label;
    Point probe;
    double lambda = 0.0;
    double discrepancy = 0.0;  ///< |u_hat| (example 1) or |u1_hat - u2_hat| (example 2)
    double reference = 0.0;    ///< single-source term (example 1) or |u1_hat| (example 2)
};

/// Dipole q (delta(x - x1) - delta(x - x2)) with x1,2 = (+-a, 0[, 0]) evaluated
/// in the Laplace domain (q_hat = 1) at the probes.
std::vector<ExampleRow> nonuniqueness_example1(int n, double a, std::span<const Point> probes,
                                               std::span<const double> lambdas);

/// Twenty probes on the perpendicular bisector of the dipole.
std::vector<Point> bisector_probes(int n);

/// Source pairs (a, a, 0), (-a, -a, 0) and (a, -a, 0), (-a, a, 0) evaluated at
/// the six axis points at distance M and at the extra probes.
std::vector<ExampleRow> nonuniqueness_example2(double a, double m, std::span<const double> lambdas,
                                               std::span<const Point> extra_probes);

/// Axis points (+-M, 0, 0), (0, +-M, 0), (0, 0, +-M).
std::vector<Point> example2_sensors(double m);

}  // namespace ptsrc
