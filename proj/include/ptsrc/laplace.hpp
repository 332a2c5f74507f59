#pragma once

// Truncated Laplace transforms of sampled series and first-kind Volterra
// deconvolution for intensity recovery.

#include "ptsrc/model.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ptsrc {

struct LaplaceValue {
    double value = 0.0;
    double truncation_bound = 0.0;      ///< |psi(T)| e^(-lambda T) / lambda
    double discretization_bound = 0.0;  ///< tau^2 lambda max|psi| / 12
};

/// Trapezoidal approximation of int_0^T e^(-lambda t) psi(t) dt.
LaplaceValue laplace_transform(std::span<const double> series, const TimeGrid& grid, double lambda);

struct LaplaceSamples {
    std::string series_id;
    double horizon = 0.0;
    std::vector<double> lambdas;
    std::vector<double> values;
    std::vector<double> truncation;
    std::vector<double> discretization;

    std::size_t size() const { return lambdas.size(); }
    /// Truncation bound relative to |value| is at most `ratio`.
    bool admissible(std::size_t k, double ratio = 1e-3) const;
};

LaplaceSamples laplace_grid(std::span<const double> series, const TimeGrid& grid, std::span<const double> lambdas,
                            std::string series_id = {});

/// `count` points from lo to hi in geometric progression.
std::vector<double> geometric_grid(double lo, double hi, std::size_t count);

struct LambdaAdvice {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    std::vector<double> lambdas;
    std::string rationale;
};

/// lambda_min = max(4 / T^2, 25 / delta_hint^2), lambda_max = c / tau.
/// Throws IdentificationError when lambda_min >= lambda_max.
LambdaAdvice lambda_grid_advisor(const TimeGrid& grid, double delta_hint, double c = 0.05,
                                 std::size_t points = 12);

struct DeconvolutionOptions {
    /// Tikhonov weight on ||D q||^2; nullopt selects the discrepancy principle.
    std::optional<double> epsilon = 0.0;
    double noise_sigma = 0.0;        ///< per-sample noise level used by the discrepancy principle
    std::size_t max_unknowns = 1000;  ///< coarser cells are used above this size
};

struct DeconvolutionResult {
    std::vector<double> q;           ///< on the grid nodes t_0..t_N
    double epsilon = 0.0;            ///< regularization weight actually applied
    double residual_norm = 0.0;      ///< ||W q - psi|| at the fitting nodes
    double seminorm = 0.0;           ///< ||D q|| of the node values
    std::size_t coarsening = 1;
    std::size_t unknowns = 0;
};

/// Solves psi(t) = int_0^t K(t - s) q(s) ds for q. q is piecewise linear
/// between coarse nodes, the kernel is integrated exactly against each hat
/// (product trapezoid rule) and the normal equations carry a first-difference
/// penalty. psi(0) is ignored. A zero epsilon is realized as a vanishing
/// penalty that only fixes the part of q the data cannot see.
DeconvolutionResult volterra_deconvolve(std::span<const double> psi, const TimeGrid& grid,
                                        const std::function<double(double)>& kernel,
                                        const DeconvolutionOptions& options = {});

/// Forward convolution int_0^t_k K(t_k - s) q(s) ds for q linear between the
/// grid samples.
std::vector<double> convolve(const std::function<double(double)>& kernel, std::span<const double> q,
                             const TimeGrid& grid);

}  // namespace ptsrc
