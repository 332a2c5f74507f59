#pragma once

// Forward models: closed-form kernels, resolvent Green functions (exact and
// leading-order asymptotic), the free-space Duhamel oracle and the 1D
// Crank-Nicolson solver.

#include "ptsrc/model.hpp"

#include <functional>
#include <span>
#include <vector>

namespace ptsrc {

/// (4 pi t)^(-n/2) exp(-r^2 / (4 t)).
double heat_kernel(int n, double r, double t);

/// Time-domain kernel V_gamma whose Laplace transform is
/// exp(-sqrt(lambda) gamma) / sqrt(lambda) for n = 1 and exp(-sqrt(lambda) gamma)
/// for n = 3; for n = 2 it is the planar heat kernel e^(-gamma^2/4t) / (4 pi t).
double v_kernel(int n, double gamma, double t);

/// Modified Bessel function of the second kind, order zero.
double bessel_k0(double x);

/// Free-space resolvent kernel of (lambda + reaction - c Laplacian) at
/// distance r. `c` is the diffusivity and only used for n = 1.
double green_laplace(int n, double r, double lambda, double reaction = 0.0, double c = 1.0);

/// Leading-order large-lambda form of the planar resolvent kernel,
/// exp(-sqrt(lambda) r) / (2 sqrt(2 pi r) lambda^(1/4)).
double green_laplace_2d_asymptotic(double r, double lambda);

enum class GreenMode { Exact, Asymptotic };

struct GreenEval {
    int dimension = 1;
    GreenMode mode = GreenMode::Asymptotic;
    double value = 0.0;
    double integral_r = 0.0;   ///< signed integral of r from source to sensor
    double integral_r1 = 0.0;  ///< signed integral of r1 from source to sensor
    double lambda_min = 0.0;
    bool valid = false;        ///< lambda >= lambda_min
};

/// Leading-order value of the 1D resolvent Green function at `b` for a unit
/// source at `x1`:
///   exp(-sqrt(lambda) |int_x1^b r| + int_x1^b r1) / (2 sqrt(lambda a2(x1))).
/// The classical statement carries a leading minus sign; this returns the
/// positive kernel, and every recovery formula only uses ratios or moduli.
/// `lambda_min <= 0` selects the default 25 / delta^2 with delta = |int r|.
GreenEval green_1d_asymptotic(const CoefficientField1D& coeffs, double x1, double b, double lambda,
                              double lambda_min = 0.0);

/// Product-integration weights of a convolution kernel over cells
/// [j step, (j + 1) step]: mass[j] = int K and first[j] = int K * (u - j step) / step.
struct CellMoments {
    std::vector<double> mass;
    std::vector<double> first;
};

CellMoments kernel_cell_moments(const std::function<double(double)>& kernel, double step, std::size_t cells,
                                bool with_first_moment = true);

/// Sensor response of point sources in free space:
///   psi(t_k) = sum_i int_0^t_k q_i(s) e^(-reaction (t_k - s)) G_n(|b - x_i|, t_k - s) ds,
/// exact for intensities that are piecewise linear on the grid.
std::vector<double> free_space_response(std::span<const PointSource> sources, const Point& sensor,
                                        const TimeGrid& grid, int n, double reaction = 0.0);

/// Spatially uniform free-space background from a constant u0 and f0.
std::vector<double> free_space_background(const Background& background, const TimeGrid& grid, double reaction);

struct CrankNicolsonOptions {
    double h = 0.0;              ///< grid spacing; <= 0 picks (b - a) / 400
    std::size_t smoothing_steps = 2;  ///< implicit-Euler half steps replacing the first CN steps
};

struct FieldHistory {
    std::vector<double> x;                       ///< grid nodes
    std::vector<std::vector<double>> u;          ///< u[k][m] at t_k, x_m
    std::vector<std::vector<double>> traces;     ///< traces[j][k] at sensor j
};

/// Second-order finite differences in space, trapezoidal in time, for
///   u_t = a2 u_xx - a1 u_x - a0 u + sum q_i(t) delta(x - x_i) + f0
/// on an Interval1D scenario. Deltas load the two bracketing nodes with hat
/// weights. `keep_field = false` stores only the sensor traces.
FieldHistory crank_nicolson_1d(const Scenario& scenario, const CrankNicolsonOptions& options = {},
                               bool keep_field = true);

/// Writes the field at time index k as CSV lines "x,u".
void write_field_slice_csv(const FieldHistory& field, std::size_t k, const std::string& path);

}  // namespace ptsrc
