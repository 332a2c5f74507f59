#pragma once

// One-dimensional identification: source location from Laplace ratios of two
// sensor series, intensity by deconvolution, and the alternation diagnostic
// for intensity recovery with known locations.

#include "ptsrc/laplace.hpp"
#include "ptsrc/model.hpp"

#include <string>
#include <vector>

namespace ptsrc {

struct AFit {
    double A = 0.0;          ///< limit of (1 / (2 sqrt(lambda))) ln(Phi1 / Phi2)
    double slope = 0.0;      ///< c in a(lambda) = A + c / sqrt(lambda)
    double residual = 0.0;   ///< RMS fit residual
    std::vector<double> lambdas;
    std::vector<double> a_values;
    std::vector<bool> used;
    std::size_t skipped_nonpositive = 0;
};

/// Fits a_k = A + c / sqrt(lambda_k) over the admissible part of the shared grid.
AFit estimate_A(const LaplaceSamples& phi1, const LaplaceSamples& phi2);

/// Half of int_{b1}^{b2} r: the admissibility bound on |A|.
double admissibility_bound(const CoefficientField1D& coeffs, double b1, double b2);

enum class Branch { Interior, LeftBoundary, RightBoundary };

const char* to_string(Branch b);

struct LambdaEstimate {
    double lambda = 0.0;
    double m = 0.0;         ///< estimated int_{b1}^{x1} r
    double x1 = 0.0;
    double weight = 0.0;    ///< truncation weight in the median
    bool bracketed = false;  ///< 0 < m < int_{b1}^{b2} r
};

struct Location1D {
    double x1_hat = 0.0;
    Branch branch = Branch::Interior;
    std::vector<LambdaEstimate> per_lambda;
    std::vector<std::string> warnings;
};

/// Per-lambda location estimates from the branch formula and their
/// truncation-weighted median. b1 < b2 are the sensor coordinates.
Location1D locate_1d(const LaplaceSamples& phi1, const LaplaceSamples& phi2, const CoefficientField1D& coeffs,
                     double b1, double b2, Branch branch = Branch::Interior);

/// x with int_{b1}^{x} r = m in the given direction (+1 right, -1 left).
double invert_distance_integral(const CoefficientField1D& coeffs, double b1, double m, int direction = 1);

struct IntensityRecovery {
    std::vector<double> q;
    double delta0 = 0.0;     ///< |int_{x1}^{b} r|
    double amplitude = 0.0;  ///< c0 = exp(int_{x1}^{b} r1) / (2 sqrt(a2(x1)))
    double decay = 0.0;      ///< kappa in the e^(-kappa t) kernel factor
    DeconvolutionResult deconvolution;
};

/// Deconvolves psi by c0 e^(-kappa t) V_delta0(t). kappa is the average of
/// a0 + a1^2 / (4 a2) between source and sensor; the kernel is exact for
/// constant coefficients and leading order otherwise.
IntensityRecovery recover_intensity_1d(std::span<const double> psi, const TimeGrid& grid,
                                       const CoefficientField1D& coeffs, double x1_hat, double b,
                                       const DeconvolutionOptions& options = {});

struct AlternationFinding {
    int condition = 0;  ///< 1, 2 or 3
    std::string detail;
};

/// Every configuration of sources and sensors under which intensity recovery
/// with known locations is non-unique. Empty does not prove uniqueness.
std::vector<AlternationFinding> alternation_diagnostic(std::vector<double> sources, std::vector<double> sensors,
                                                       const Interval1D& domain);

}  // namespace ptsrc
