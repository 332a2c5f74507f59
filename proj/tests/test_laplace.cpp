#include "oracles.hpp"

#include "ptsrc/forward.hpp"
#include "ptsrc/laplace.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace ptsrc;

namespace {

std::vector<double> sampled(const TimeGrid& g, const std::function<double(double)>& f) {
    std::vector<double> v(g.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = f(g.time(k));
    return v;
}

double rel_l2(const std::vector<double>& est, const std::vector<double>& truth, std::size_t from = 1) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = from; k < truth.size(); ++k) {
        num += (est[k] - truth[k]) * (est[k] - truth[k]);
        den += truth[k] * truth[k];
    }
    return std::sqrt(num / den);
}

// V_delta * q at the grid nodes by composite Gauss on each step; independent of
// the library's product weights.
std::vector<double> oracle_convolution(double delta, const std::function<double(double)>& q, const TimeGrid& g) {
    std::vector<double> out(g.size(), 0.0);
    const double tau = g.tau;
    for (std::size_t k = 1; k < g.size(); ++k) {
        double acc = 0.0;
        const double t = g.time(k);
        for (std::size_t j = 0; j < k; ++j) {
            acc += oracle::integrate(
                [&](double s) { return t - s > 0.0 ? q(s) * v_kernel(1, delta, t - s) : 0.0; }, j * tau, (j + 1) * tau,
                1);
        }
        out[k] = acc;
    }
    return out;
}

}  // namespace

TEST_CASE("transform of elementary series") {
    const TimeGrid g{1e-4, 400000};
    const auto one = sampled(g, [](double) { return 1.0; });
    CHECK(std::abs(laplace_transform(one, g, 1.0).value - (1.0 - std::exp(-40.0))) <= 1e-8);

    const TimeGrid g20{1e-3, 20000};
    const auto decay = sampled(g20, [](double t) { return std::exp(-t); });
    CHECK(laplace_transform(decay, g20, 1.0).value ==
          doctest::Approx((1.0 - std::exp(-40.0)) / 2.0).epsilon(1e-6));
}

TEST_CASE("transform of the sampled kernel") {
    const TimeGrid g{1e-4, 400000};
    const auto v = sampled(g, [](double t) { return t > 0.0 ? v_kernel(1, 1.0, t) : 0.0; });
    CHECK(std::abs(laplace_transform(v, g, 4.0).value - std::exp(-2.0) / 2.0) <= 1e-6);
}

TEST_CASE("error bounds are reported") {
    const TimeGrid g{1e-2, 100};
    const auto one = sampled(g, [](double) { return 1.0; });
    const auto lv = laplace_transform(one, g, 2.0);
    CHECK(lv.truncation_bound == doctest::Approx(std::exp(-2.0) / 2.0));
    CHECK(lv.discretization_bound == doctest::Approx(1e-4 * 2.0 / 12.0));
    // the truncation bound dominates the actual tail
    CHECK(std::abs(lv.value - 0.5) <= lv.truncation_bound + lv.discretization_bound);
    CHECK_THROWS_AS(laplace_transform(one, g, 0.0), ValidationError);
    CHECK_THROWS_AS(laplace_transform(one, g, -1.0), ValidationError);
}

TEST_CASE("laplace_grid maps the transform") {
    const TimeGrid g{1e-3, 2000};
    const auto one = sampled(g, [](double) { return 1.0; });
    const auto lambdas = geometric_grid(0.5, 50.0, 12);
    const auto s = laplace_grid(one, g, lambdas, "c");
    REQUIRE(s.size() == 12);
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double l = lambdas[k];
        CHECK(s.values[k] == doctest::Approx((1.0 - std::exp(-l * 2.0)) / l).epsilon(1e-5));
        if (k > 0) CHECK(s.values[k] < s.values[k - 1]);
    }
    const std::vector<double> single{3.0};
    const auto one_point = laplace_grid(one, g, single);
    REQUIRE(one_point.size() == 1);
    CHECK(one_point.values[0] == laplace_transform(one, g, 3.0).value);
    CHECK_THROWS_AS(laplace_grid(one, g, std::vector<double>{}), ValidationError);
    CHECK_THROWS_AS(laplace_grid(one, g, std::vector<double>{2.0, 1.0}), ValidationError);
}

TEST_CASE("log-transform slope recovers the distance") {
    const TimeGrid g{1e-4, 100000};
    const auto v = sampled(g, [](double t) { return t > 0.0 ? v_kernel(1, 1.0, t) : 0.0; });
    const auto lambdas = geometric_grid(25.0, 100.0, 10);
    const auto s = laplace_grid(v, g, lambdas);
    // ln Phi + ln(lambda) / 2 = -sqrt(lambda) delta
    Eigen::MatrixXd a(s.size(), 2);
    Eigen::VectorXd y(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
        a(k, 0) = std::sqrt(lambdas[k]);
        a(k, 1) = 1.0;
        y(k) = std::log(s.values[k]) + 0.5 * std::log(lambdas[k]);
    }
    const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(y);
    CHECK(-coef(0) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("admissibility uses the truncation bound") {
    const TimeGrid g{1e-2, 100};
    const auto one = sampled(g, [](double) { return 1.0; });
    const std::vector<double> lambdas{1.0, 10.0};
    const auto s = laplace_grid(one, g, lambdas);
    CHECK_FALSE(s.admissible(0));  // e^(-1) truncation
    CHECK(s.admissible(1));
}

TEST_CASE("lambda grid advisor") {
    const auto a = lambda_grid_advisor(TimeGrid{1e-4, 100000}, 0.5);
    CHECK(a.lambda_max == doctest::Approx(500.0));
    CHECK(a.lambda_min == doctest::Approx(100.0));
    CHECK(a.lambdas.size() >= 12);
    CHECK(a.lambdas.front() == doctest::Approx(100.0));
    CHECK(a.lambdas.back() == doctest::Approx(500.0));
    CHECK_FALSE(a.rationale.empty());

    try {
        lambda_grid_advisor(TimeGrid{0.1, 100}, 0.1);
        FAIL("expected an identification error");
    } catch (const IdentificationError& e) {
        CHECK(e.stage() == "lambda_grid_advisor");
    }

    const auto far = lambda_grid_advisor(TimeGrid{1e-3, 10000}, std::numeric_limits<double>::infinity());
    CHECK(far.lambda_min == doctest::Approx(4.0 / 100.0));
}

TEST_CASE("geometric grid") {
    const auto g = geometric_grid(1.0, 16.0, 5);
    REQUIRE(g.size() == 5);
    CHECK(g[2] == doctest::Approx(4.0));
    CHECK(g.back() == 16.0);
    CHECK_THROWS(geometric_grid(2.0, 1.0, 5));
}

TEST_CASE("deconvolution of zero data is zero") {
    const TimeGrid g{1e-3, 500};
    const std::vector<double> zero(g.size(), 0.0);
    const auto r = volterra_deconvolve(zero, g, [](double t) { return v_kernel(1, 0.5, t); });
    CHECK(std::all_of(r.q.begin(), r.q.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("deconvolution round trip with unit intensity") {
    const TimeGrid g{1e-3, 5000};
    std::vector<double> psi(g.size());
    for (std::size_t k = 0; k < psi.size(); ++k) psi[k] = oracle::step_response_1d(0.5, g.time(k)) * 2.0;
    // 2 * step response = V_0.5 * 1 for the unit-diffusivity kernel e^(-r^2/4t) / sqrt(pi t)
    const auto r = volterra_deconvolve(psi, g, [](double t) { return v_kernel(1, 0.5, t); });
    const std::vector<double> one(g.size(), 1.0);
    CHECK(rel_l2(r.q, one, 500) <= 1e-3);
    CHECK(r.residual_norm >= 0.0);
}

TEST_CASE("deconvolution round trip with a varying intensity and noise") {
    const TimeGrid g{1e-3, 3000};
    const auto q = [](double t) { return 1.0 + std::sin(t); };
    const auto psi = oracle_convolution(0.5, q, g);
    const auto truth = sampled(g, q);
    const auto kernel = [](double t) { return v_kernel(1, 0.5, t); };
    const auto clean = volterra_deconvolve(psi, g, kernel);
    CHECK(rel_l2(clean.q, truth, 300) <= 1e-3);

    const double peak = *std::max_element(psi.begin(), psi.end());
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 1e-3 * peak);
    auto noisy = psi;
    for (std::size_t k = 1; k < noisy.size(); ++k) noisy[k] += n(rng);
    DeconvolutionOptions opt;
    opt.epsilon.reset();
    opt.noise_sigma = 1e-3 * peak;
    const auto reg = volterra_deconvolve(noisy, g, kernel, opt);
    CHECK(reg.epsilon > 0.0);
    CHECK(rel_l2(reg.q, truth, 300) <= 0.05);
}

TEST_CASE("deconvolution inverts the forward convolution") {
    // Random nonnegative piecewise-linear intensities. The data cannot see q
    // before the kernel switches on (about gamma^2 / 4) nor over the last
    // gamma^2 / 2, where the kernel has not yet peaked; the check runs between.
    const TimeGrid g{1e-3, 5000};
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    for (double gamma : {0.2, 0.5, 1.0, 1.5, 2.0}) {
        std::vector<double> knots(11);
        for (auto& v : knots) v = u(rng);
        knots[0] = 0.0;
        std::vector<double> q(g.size());
        for (std::size_t k = 0; k < q.size(); ++k) {
            const double s = g.time(k) / 0.5;
            const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(s), 9);
            q[k] = (1.0 - (s - i)) * knots[i] + (s - i) * knots[i + 1];
        }
        const auto kernel = [gamma](double t) { return v_kernel(1, gamma, t); };
        const auto psi = convolve(kernel, q, g);
        const auto r = volterra_deconvolve(psi, g, kernel);
        const auto from = static_cast<std::size_t>((gamma * gamma / 4.0 + 0.2) / g.tau);
        const auto to = static_cast<std::size_t>((g.horizon() - gamma * gamma / 2.0) / g.tau);
        const std::vector<double> qs(q.begin(), q.begin() + to), rs(r.q.begin(), r.q.begin() + to);
        CAPTURE(gamma);
        CHECK(rel_l2(rs, qs, from) <= 1e-3);
    }
}

TEST_CASE("convolution matches the independent quadrature") {
    const TimeGrid g{1e-2, 300};
    const auto q = [](double t) { return 1.0 + t; };
    const auto ours = convolve([](double t) { return v_kernel(1, 0.5, t); }, sampled(g, q), g);
    const auto ref = oracle_convolution(0.5, q, g);
    for (std::size_t k = 20; k < g.size(); k += 40) CHECK(ours[k] == doctest::Approx(ref[k]).epsilon(1e-8));
}

TEST_CASE("Laplace transform turns convolution into a product") {
    const TimeGrid g{1e-3, 20000};
    std::vector<double> q(g.size());
    for (std::size_t k = 0; k < q.size(); ++k) q[k] = 1.0 + std::sin(g.time(k));
    for (double gamma : {0.5, 1.0}) {
        const auto kernel = [gamma](double t) { return v_kernel(1, gamma, t); };
        const auto psi = convolve(kernel, q, g);
        for (double lambda : {4.0, 16.0}) {
            const double s = std::sqrt(lambda);
            const double lq = 1.0 / lambda + 1.0 / (lambda * lambda + 1.0);
            const double product = std::exp(-s * gamma) / s * lq;
            const auto lv = laplace_transform(psi, g, lambda);
            CHECK(std::abs(lv.value - product) <= 1e-6 * product + lv.truncation_bound + lv.discretization_bound);
        }
    }
}

TEST_CASE("regularization trades residual for smoothness") {
    const TimeGrid g{1e-3, 2000};
    std::vector<double> q(g.size());
    for (std::size_t k = 0; k < q.size(); ++k) q[k] = 1.0 + std::sin(3.0 * g.time(k));
    const auto kernel = [](double t) { return v_kernel(1, 0.5, t); };
    auto psi = convolve(kernel, q, g);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1e-3);
    for (std::size_t k = 1; k < psi.size(); ++k) psi[k] += n(rng);

    double last_res = -1.0;
    double last_semi = std::numeric_limits<double>::infinity();
    for (double eps : {1e-8, 1e-6, 1e-4, 1e-2, 1.0, 100.0}) {
        DeconvolutionOptions opt;
        opt.epsilon = eps;
        const auto r = volterra_deconvolve(psi, g, kernel, opt);
        CHECK(r.residual_norm >= last_res * (1.0 - 1e-9));
        CHECK(r.seminorm <= last_semi * (1.0 + 1e-9));
        last_res = r.residual_norm;
        last_semi = r.seminorm;
    }
}

TEST_CASE("deconvolution fails on a kernel with no mass in the window") {
    const TimeGrid g{1e-3, 100};
    std::vector<double> psi(g.size(), 0.0);
    psi.back() = 1e-30;
    try {
        volterra_deconvolve(psi, g, [](double t) { return v_kernel(1, 5.0, t); });
        FAIL("expected an identification error");
    } catch (const IdentificationError& e) {
        CHECK(e.stage() == "deconvolution");
    }
}

TEST_CASE("deconvolution validates its inputs") {
    const TimeGrid g{1e-3, 10};
    const std::vector<double> short_series(5, 0.0);
    CHECK_THROWS_AS(volterra_deconvolve(short_series, g, [](double) { return 1.0; }), ValidationError);
    const std::vector<double> psi(g.size(), 0.0);
    DeconvolutionOptions opt;
    opt.epsilon = -1.0;
    CHECK_THROWS_AS(volterra_deconvolve(psi, g, [](double) { return 1.0; }, opt), ValidationError);
}
