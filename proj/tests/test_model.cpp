#include "ptsrc/model.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace ptsrc;

namespace {

Point pt(std::initializer_list<double> v) {
    Point p(static_cast<Eigen::Index>(v.size()));
    Eigen::Index k = 0;
    for (double x : v) p(k++) = x;
    return p;
}

Scenario free_space_3d() {
    Scenario s;
    s.domain = FreeSpace{3, 0.0};
    s.sources = {{pt({0.2, 0.1, -0.3}), ConstantIntensity{1.0}}};
    s.sensors = {pt({1, 0, 0}), pt({0, 1, 0}), pt({0, 0, 1})};
    s.grid = TimeGrid{1e-3, 100};
    return s;
}

Scenario interval_scenario() {
    Scenario s;
    s.domain = Interval1D{0.0, 1.0, Dirichlet{}, Robin{0.5, {}}};
    s.coefficients = CoefficientField1D::constant(0.0, 1.0, 1.0);
    s.sources = {{pt({0.3}), ConstantIntensity{1.0}}};
    s.sensors = {pt({0.0}), pt({1.0})};
    s.grid = TimeGrid{1e-3, 100};
    return s;
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
    return std::any_of(v.begin(), v.end(), [&](const auto& s) { return s.find(needle) != std::string::npos; });
}

}  // namespace

TEST_CASE("validate_scenario accepts well-formed scenarios") {
    CHECK(validate_scenario(free_space_3d()).empty());
    CHECK(validate_scenario(interval_scenario()).empty());
}

TEST_CASE("validate_scenario reports a zero a2 sample") {
    auto s = interval_scenario();
    s.coefficients = CoefficientField1D(0.0, 1.0, {1.0, 0.0, 1.0}, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0});
    const auto v = validate_scenario(s);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == "coefficients.a2: ellipticity M1>0 violated");
}

TEST_CASE("validate_scenario names duplicated sensors") {
    auto s = free_space_3d();
    s.sensors.push_back(s.sensors[1]);
    const auto v = validate_scenario(s);
    REQUIRE(v.size() == 1);
    CHECK(v[0].rfind("sensors", 0) == 0);
}

TEST_CASE("validate_scenario catches broken invariants field by field") {
    auto s = free_space_3d();
    s.grid.tau = 0.0;
    CHECK(mentions(validate_scenario(s), "time.tau"));

    s = free_space_3d();
    s.grid.steps = 1;
    CHECK(mentions(validate_scenario(s), "time.steps"));

    s = free_space_3d();
    s.domain = FreeSpace{4, 0.0};
    CHECK(mentions(validate_scenario(s), "domain.dimension"));

    s = free_space_3d();
    s.domain = FreeSpace{3, -1.0};
    CHECK(mentions(validate_scenario(s), "domain.reaction"));

    s = interval_scenario();
    s.sources[0].location = pt({1.0});
    CHECK(mentions(validate_scenario(s), "sources[0].location"));

    s = interval_scenario();
    s.domain = Interval1D{1.0, 0.0, Dirichlet{}, Dirichlet{}};
    CHECK(mentions(validate_scenario(s), "domain"));

    s = interval_scenario();
    s.domain = Interval1D{0.0, 1.0, Robin{std::nan(""), {}}, Dirichlet{}};
    CHECK(mentions(validate_scenario(s), "sigma"));

    s = free_space_3d();
    s.sensors.push_back(s.sources[0].location);
    CHECK(mentions(validate_scenario(s), "coincides"));

    s = free_space_3d();
    s.noise.sigma = -1.0;
    CHECK(mentions(validate_scenario(s), "noise.sigma"));

    s = free_space_3d();
    s.sources[0].intensity = SampledIntensity{{1.0, 2.0}};
    CHECK(mentions(validate_scenario(s), "intensity"));
}

TEST_CASE("validate_scenario is idempotent and independent of field order") {
    auto s = free_space_3d();
    s.sensors.push_back(s.sensors[0]);
    s.noise.sigma = -2.0;
    s.grid.steps = 1;
    const auto first = validate_scenario(s);
    CHECK(first == validate_scenario(s));
    CHECK(first.size() == 3);

    auto sorted = first;
    std::sort(sorted.begin(), sorted.end());
    // Same faults introduced in a different order.
    auto t = free_space_3d();
    t.grid.steps = 1;
    t.noise.sigma = -2.0;
    t.sensors.push_back(t.sensors[0]);
    auto other = validate_scenario(t);
    std::sort(other.begin(), other.end());
    CHECK(sorted == other);
}

TEST_CASE("sensor_source_distances on the line") {
    const std::vector<Point> sources{pt({0.3})};
    const std::vector<Point> sensors{pt({0.0}), pt({1.0})};
    const auto t = sensor_source_distances(sources, sensors);
    CHECK(t.r(0, 0) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(t.r(0, 1) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(t.delta(0) == doctest::Approx(0.3));
    CHECK(t.delta(1) == doctest::Approx(0.7));
}

TEST_CASE("sensor_source_distances for the two-pair layout") {
    const std::vector<Point> sources{pt({1, 1, 0}), pt({-1, -1, 0})};
    const std::vector<Point> sensors{pt({3, 0, 0})};
    const auto t = sensor_source_distances(sources, sensors);
    const double brute = std::sqrt((3.0 - 1.0) * (3.0 - 1.0) + 1.0);
    CHECK(t.delta(0) == doctest::Approx(brute).epsilon(1e-15));
    CHECK(t.delta(0) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));
    CHECK(t.argmin[0] == std::vector<std::size_t>{0});
}

TEST_CASE("sensor_source_distances keeps the full argmin set") {
    const std::vector<Point> sources{pt({0, 0})};
    const std::vector<Point> sensors{pt({1, 0}), pt({-1, 0})};
    const auto t = sensor_source_distances(sources, sensors);
    CHECK(t.delta(0) == 1.0);
    CHECK(t.delta(1) == 1.0);
    CHECK(t.argmin[0] == std::vector<std::size_t>{0});
    CHECK(t.argmin[1] == std::vector<std::size_t>{0});

    const std::vector<Point> pair{pt({1, 0}), pt({-1, 0})};
    const std::vector<Point> middle{pt({0, 2})};
    CHECK(sensor_source_distances(pair, middle).argmin[0] == std::vector<std::size_t>{0, 1});
}

TEST_CASE("sensor_source_distances rejects mismatched dimensions") {
    const std::vector<Point> sources{pt({0, 0})};
    const std::vector<Point> sensors{pt({1, 0, 0})};
    CHECK_THROWS_AS(sensor_source_distances(sources, sensors), ValidationError);
}

TEST_CASE("delta is the row minimum on random layouts") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Point> sources(4, Point(3));
        std::vector<Point> sensors(5, Point(3));
        for (auto& p : sources) p << u(rng), u(rng), u(rng);
        for (auto& p : sensors) p << u(rng), u(rng), u(rng);
        const auto t = sensor_source_distances(sources, sensors);
        for (std::size_t j = 0; j < sensors.size(); ++j) {
            for (std::size_t i = 0; i < sources.size(); ++i) {
                CHECK(t.r(i, j) == doctest::Approx((sources[i] - sensors[j]).norm()));
                CHECK(t.delta(j) <= t.r(i, j));
            }
            for (auto i : t.argmin[j]) CHECK(t.delta(j) == t.r(i, j));
        }
    }
}

TEST_CASE("coefficient integrals match analytic antiderivatives") {
    // a2 = 1 + x, r = (1 + x)^(-1/2), int_0^1 r = 2 (sqrt 2 - 1)
    std::vector<double> a2, zero;
    for (int k = 0; k <= 64; ++k) {
        a2.push_back(1.0 + k / 64.0);
        zero.push_back(0.0);
    }
    const CoefficientField1D c(0.0, 1.0, a2, zero, zero);
    CHECK(c.integral_r(0.0, 1.0) == doctest::Approx(2.0 * (std::sqrt(2.0) - 1.0)).epsilon(1e-10));
    CHECK(c.integral_r(1.0, 0.0) == doctest::Approx(-2.0 * (std::sqrt(2.0) - 1.0)).epsilon(1e-10));
    // r1 = a2' / (4 a2) = 1 / (4 (1 + x)), integral ln(2) / 4
    CHECK(c.integral_r1(0.0, 1.0) == doctest::Approx(std::log(2.0) / 4.0).epsilon(1e-9));
    CHECK(c.min_a2() == doctest::Approx(1.0));
    CHECK(c.max_a2() == doctest::Approx(2.0));
}

TEST_CASE("drift enters r1 as a1 / (2 a2)") {
    const auto c = CoefficientField1D::constant(0.0, 1.0, 2.0, 1.0);
    CHECK(c.r(0.4) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(c.r1(0.4) == doctest::Approx(0.25));
    CHECK(c.a2_is_constant());
}

TEST_CASE("non-elliptic coefficients throw on use") {
    const CoefficientField1D c(0.0, 1.0, {1.0, -1.0}, {0.0, 0.0}, {0.0, 0.0}, 1);
    CHECK_FALSE(c.elliptic());
    CHECK_THROWS_AS(c.r(0.5), ValidationError);
}

TEST_CASE("time grid samples include both ends") {
    const TimeGrid g{0.5, 4};
    CHECK(g.size() == 5);
    CHECK(g.horizon() == 2.0);
    CHECK(g.time(3) == 1.5);
}
