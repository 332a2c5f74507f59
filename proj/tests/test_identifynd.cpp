#include "oracles.hpp"

#include "ptsrc/forward.hpp"
#include "ptsrc/identifynd.hpp"

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

// Transform of a unit constant source: G_hat(alpha, lambda) / lambda.
LaplaceSamples exact_samples(int n, double alpha, const std::vector<double>& lambdas) {
    LaplaceSamples s;
    s.lambdas = lambdas;
    for (double l : lambdas) {
        const double g = n == 3 ? std::exp(-std::sqrt(l) * alpha) / (4.0 * M_PI * alpha)
                                : oracle::bessel_k0(std::sqrt(l) * alpha) / (2.0 * M_PI);
        s.values.push_back(g / l);
        s.truncation.push_back(0.0);
        s.discretization.push_back(0.0);
    }
    return s;
}

std::vector<double> ladder(int lo, int hi) {
    std::vector<double> out;
    for (int a = lo; a <= hi; ++a) out.push_back(static_cast<double>(a) * a);
    return out;
}

std::vector<SensorRecord> records_for(const Point& source, const std::vector<Point>& sensors, const TimeGrid& grid,
                                      int n) {
    const std::vector<PointSource> src{{source, ConstantIntensity{1.0}}};
    std::vector<SensorRecord> out;
    for (const auto& b : sensors) out.push_back({b, free_space_response(src, b, grid, n), grid});
    return out;
}

const std::vector<Point> kTetra{pt({1.0, 0.0, 0.0}), pt({0.0, 1.2, 0.3}), pt({-0.8, -0.5, 0.4}),
                                pt({0.3, -0.4, -1.3})};

}  // namespace

TEST_CASE("distance differences are exact for the three-dimensional kernel") {
    const auto l = ladder(8, 16);
    const auto g = g_ratio(exact_samples(3, 1.7, l), exact_samples(3, 1.2, l));
    const auto f = distance_differences(g);
    CHECK(f.d == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(std::abs(f.slope) <= 1e-8);
    CHECK(f.alphas.size() == 8);
}

TEST_CASE("planar distance differences carry an O(1 / alpha^2) bias") {
    const auto l = ladder(8, 16);
    const auto g = g_ratio(exact_samples(2, 1.7, l), exact_samples(2, 1.2, l));
    const auto f = distance_differences(g);
    CHECK(std::abs(f.d - 0.5) <= 2e-3);
    const auto far = distance_differences(g_ratio(exact_samples(2, 1.7, ladder(30, 40)),
                                                  exact_samples(2, 1.2, ladder(30, 40))));
    CHECK(std::abs(far.d - 0.5) < std::abs(f.d - 0.5));
}

TEST_CASE("distance differences skip steps that are not on the unit ladder") {
    auto l = ladder(8, 12);
    l.push_back(200.0);
    const auto f = distance_differences(g_ratio(exact_samples(3, 1.0, l), exact_samples(3, 0.7, l)));
    CHECK(f.alphas.size() == 4);
    CHECK_THROWS_AS(distance_differences(g_ratio(exact_samples(3, 1.0, ladder(8, 10)),
                                                 exact_samples(3, 0.7, ladder(8, 10)))),
                    IdentificationError);
}

TEST_CASE("g_ratio rejects mismatched grids and unresolved denominators") {
    auto a = exact_samples(3, 1.0, ladder(8, 12));
    auto b = exact_samples(3, 1.0, ladder(9, 13));
    CHECK_THROWS_AS(g_ratio(a, b), IdentificationError);
    b = a;
    b.truncation[2] = 2.0 * b.values[2];
    try {
        g_ratio(a, b);
        FAIL("expected a truncation error");
    } catch (const IdentificationError& e) {
        CHECK(e.stage() == "g_ratio");
    }
}

TEST_CASE("distances from a ratio and a difference") {
    const auto p = distances_from_ratio(0.5, 1.0);
    CHECK(p.alpha_i == doctest::Approx(1.0));
    CHECK(p.alpha_j == doctest::Approx(2.0));

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    for (int trial = 0; trial < 50; ++trial) {
        const double ai = u(rng);
        const double aj = u(rng);
        if (std::abs(ai - aj) < 1e-3) continue;
        const auto q = distances_from_ratio(ai / aj, aj - ai);
        CHECK(q.alpha_i == doctest::Approx(ai).epsilon(1e-9));
        CHECK(q.alpha_j == doctest::Approx(aj).epsilon(1e-9));
    }
    CHECK_THROWS_AS(distances_from_ratio(1.0, 0.3), IdentificationError);
    CHECK_THROWS_AS(distances_from_ratio(2.0, 0.3), IdentificationError);
}

TEST_CASE("pairwise solve inverts the leading-order ratio") {
    const double ai = 0.8, aj = 1.9, lambda = 100.0;
    const double s = std::sqrt(lambda);
    const double g3 = ai / aj * std::exp(-s * (aj - ai));
    const auto p3 = pairwise_distance_solve(3, g3, aj - ai, lambda);
    CHECK(p3.alpha_i == doctest::Approx(ai));
    CHECK(p3.alpha_j == doctest::Approx(aj));

    const double g2 = std::sqrt(ai / aj) * std::exp(-s * (aj - ai));
    const auto p2 = pairwise_distance_solve(2, g2, aj - ai, lambda);
    CHECK(p2.alpha_j == doctest::Approx(aj));

    // with reaction the exponent uses sqrt(lambda + reaction)
    const double gr = ai / aj * std::exp(-std::sqrt(lambda + 21.0) * (aj - ai));
    CHECK(pairwise_distance_solve(3, gr, aj - ai, lambda, 21.0).alpha_i == doctest::Approx(ai));

    CHECK_THROWS_AS(pairwise_distance_solve(4, g3, aj - ai, lambda), ValidationError);
    CHECK_THROWS_AS(pairwise_distance_solve(3, -1.0, aj - ai, lambda), IdentificationError);
}

TEST_CASE("circumcenter of a triangle and of a tetrahedron") {
    const Point c2 = pt({0.3, -0.2});
    std::vector<Point> tri;
    for (double t : {0.1, 2.0, 4.0}) tri.push_back(c2 + 2.0 * pt({std::cos(t), std::sin(t)}));
    CHECK((circumcenter_case(tri) - c2).norm() <= 1e-12);

    const Point c3 = pt({0.1, 0.2, -0.4});
    std::vector<Point> tet;
    for (const auto& d : kTetra) tet.push_back(c3 + 1.5 * d.normalized());
    CHECK((circumcenter_case(tet) - c3).norm() <= 1e-12);

    const std::vector<Point> line{pt({0, 0}), pt({1, 1}), pt({2, 2})};
    CHECK_THROWS_AS(circumcenter_case(line), IdentificationError);
    CHECK_THROWS_AS(circumcenter_case(std::vector<Point>{pt({0, 0}), pt({1, 0})}), IdentificationError);
}

TEST_CASE("multilateration recovers random sources from exact distances") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        const Point x = pt({u(rng), u(rng), u(rng)});
        std::vector<double> alphas;
        for (const auto& b : kTetra) alphas.push_back((x - b).norm());
        const auto m = multilaterate(kTetra, alphas);
        CHECK((m.x - x).norm() <= 1e-10);
        CHECK(m.rms_residual <= 1e-10);
        CHECK_FALSE(m.inconsistent);
        CHECK(m.condition_number >= 1.0);
    }
}

TEST_CASE("multilateration flags inconsistent distances") {
    const Point x = pt({0.2, 0.1, -0.3});
    std::vector<Point> sensors = kTetra;
    sensors.push_back(pt({0.9, 0.9, 0.9}));
    std::vector<double> alphas;
    for (const auto& b : sensors) alphas.push_back((x - b).norm());
    alphas.back() += 0.5;
    CHECK(multilaterate(sensors, alphas).inconsistent);

    alphas.back() = -1.0;
    CHECK_THROWS_AS(multilaterate(sensors, alphas), IdentificationError);
    alphas.pop_back();
    CHECK_THROWS_AS(multilaterate(sensors, alphas), IdentificationError);
}

TEST_CASE("locate_nd on free-space data") {
    const Point x1 = pt({0.2, 0.1, -0.3});
    const TimeGrid grid{1e-3, 10000};
    const auto records = records_for(x1, kTetra, grid, 3);
    LocateOptions opt;
    opt.lambda_min = 64.0;
    opt.lambda_max = 256.0;
    const auto rec = locate_nd(records, 3, opt);
    CHECK((rec.x1_hat - x1).norm() <= 1e-6);
    CHECK_FALSE(rec.degenerate);
    CHECK(rec.condition_d.holds);
    CHECK(rec.ladder.front() == doctest::Approx(8.0));
    CHECK(rec.ladder.back() == doctest::Approx(16.0));
    for (std::size_t i = 0; i < kTetra.size(); ++i) {
        for (std::size_t j = 0; j < kTetra.size(); ++j) {
            const double d = (kTetra[j] - x1).norm() - (kTetra[i] - x1).norm();
            CHECK(rec.d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) ==
                  doctest::Approx(d).epsilon(1e-6).scale(1.0));
        }
    }

    SUBCASE("translation moves the estimate with the layout") {
        const Point shift = pt({2.0, -1.0, 0.5});
        std::vector<Point> moved;
        for (const auto& b : kTetra) moved.push_back(b + shift);
        const auto rec2 = locate_nd(records_for(x1 + shift, moved, grid, 3), 3, opt);
        CHECK((rec2.x1_hat - rec.x1_hat - shift).norm() <= 1e-8);
    }

    SUBCASE("a common intensity scale does not move the estimate") {
        auto scaled = records;
        for (auto& r : scaled) {
            for (auto& v : r.samples) v *= 7.0;
        }
        CHECK((locate_nd(scaled, 3, opt).x1_hat - rec.x1_hat).norm() <= 1e-9);
    }
}

TEST_CASE("locate_nd with reaction") {
    const Point x1 = pt({0.2, 0.1, -0.3});
    const TimeGrid grid{1e-3, 10000};
    const std::vector<PointSource> src{{x1, ConstantIntensity{1.0}}};
    std::vector<SensorRecord> records;
    for (const auto& b : kTetra) records.push_back({b, free_space_response(src, b, grid, 3, 4.0), grid});
    LocateOptions opt;
    opt.lambda_min = 60.0;
    opt.lambda_max = 252.0;
    opt.reaction = 4.0;
    const auto rec = locate_nd(records, 3, opt);
    CHECK((rec.x1_hat - x1).norm() <= 1e-6);
}

TEST_CASE("an equidistant source is the circumcenter") {
    const Point c = pt({0.1, 0.2, -0.4});
    std::vector<Point> sensors;
    for (const auto& d : kTetra) sensors.push_back(c + 1.5 * d.normalized());
    const TimeGrid grid{1e-3, 10000};
    LocateOptions opt;
    opt.lambda_min = 64.0;
    opt.lambda_max = 256.0;
    const auto rec = locate_nd(records_for(c, sensors, grid, 3), 3, opt);
    CHECK(rec.degenerate);
    CHECK((rec.x1_hat - c).norm() <= 1e-9);
    CHECK_FALSE(rec.diagnostics.empty());
}

TEST_CASE("locate_nd refuses sensors that violate condition D") {
    const TimeGrid grid{1e-3, 2000};
    const std::vector<Point> line{pt({0, 0}), pt({1, 1}), pt({2, 2})};
    try {
        locate_nd(records_for(pt({0.5, -0.3}), line, grid, 2), 2);
        FAIL("expected a condition D error");
    } catch (const IdentificationError& e) {
        CHECK(e.stage() == "condition_D");
    }
    CHECK_THROWS_AS(locate_nd(records_for(pt({0.5, -0.3}), line, grid, 2), 4), ValidationError);
    const std::vector<Point> two{pt({0, 0}), pt({1, 1})};
    CHECK_THROWS_AS(locate_nd(records_for(pt({0.5, -0.3}), two, grid, 2), 2), IdentificationError);
}

TEST_CASE("intensity from every sensor agrees for exact distances") {
    const Point x1 = pt({0.2, 0.1, -0.3});
    const TimeGrid grid{1e-3, 3000};
    const auto records = records_for(x1, kTetra, grid, 3);
    std::vector<double> alphas;
    for (const auto& b : kTetra) alphas.push_back((b - x1).norm());
    const auto rec = recover_intensity_nd(records, alphas, 3);
    CHECK(rec.per_sensor.size() == 4);
    CHECK(rec.reference == static_cast<std::size_t>(std::min_element(alphas.begin(), alphas.end()) - alphas.begin()));
    CHECK_FALSE(rec.flagged);
    CHECK(rec.spread <= 0.02);
    for (std::size_t k = 300; k < grid.size(); k += 300) CHECK(rec.q[k] == doctest::Approx(1.0).epsilon(0.02));

    auto wrong = alphas;
    wrong[1] *= 1.6;
    CHECK(recover_intensity_nd(records, wrong, 3).flagged);
    wrong[1] = 0.0;
    CHECK_THROWS_AS(recover_intensity_nd(records, wrong, 3), IdentificationError);
}

TEST_CASE("condition D on planar and spatial layouts") {
    const std::vector<Point> square{pt({0, 0}), pt({1, 0}), pt({0, 1}), pt({1, 1})};
    CHECK(condition_D_check(square, 2).holds);
    const std::vector<Point> bent{pt({0, 0}), pt({1, 0}), pt({0.3, 0.7}), pt({2, 0})};
    const auto r = condition_D_check(bent, 2);
    CHECK_FALSE(r.holds);
    CHECK(r.witness == std::vector<std::size_t>{0, 1, 3});

    CHECK(condition_D_check(kTetra, 3).holds);
    auto flat = kTetra;
    flat.push_back(pt({0.5, 0.5, 0.0}));
    flat.push_back(pt({0.0, 0.0, 0.0}));
    flat.push_back(pt({2.0, 0.0, 0.0}));
    const auto w = condition_D_check(flat, 3);
    CHECK_FALSE(w.holds);
    CHECK(w.witness.size() == 4);

    // invariant under scaling of the whole layout
    auto big = bent;
    for (auto& p : big) p *= 1e6;
    CHECK_FALSE(condition_D_check(big, 2).holds);
}

TEST_CASE("A0 picks nearest sources and weighs them by the drift") {
    const std::vector<Point> sources{pt({1, 1, 0}), pt({-1, -1, 0})};
    const std::vector<Point> sensors{pt({3, 0, 0}), pt({-3, 0, 0}), pt({0, 0, 5})};
    const auto zero = build_A0(sources, sensors, DriftFieldND::zero(3));
    CHECK_FALSE(zero.square);
    CHECK_FALSE(zero.determinant.has_value());
    CHECK(zero.entries(0, 0) == 1.0);
    CHECK(zero.entries(0, 1) == 0.0);
    CHECK(zero.entries(1, 1) == 1.0);
    // equidistant sensor keeps both sources
    CHECK(zero.entries(2, 0) == 1.0);
    CHECK(zero.entries(2, 1) == 1.0);

    DriftFieldND drift = DriftFieldND::zero(3);
    drift.constant << 0.4, 0.0, 0.0;
    const auto a = build_A0(sources, sensors, drift);
    // phi_j(x) = -(a, x - b_j) / 2 for constant a
    CHECK(a.phi(0, 0) == doctest::Approx(-0.5 * 0.4 * (1.0 - 3.0)));
    CHECK(a.entries(0, 0) == doctest::Approx(std::exp(0.4)));
    CHECK(a.entries(1, 1) == doctest::Approx(std::exp(-0.5 * 0.4 * (-1.0 + 3.0))));

    const std::vector<Point> two{sensors[0], sensors[1]};
    const auto sq = build_A0(sources, two, DriftFieldND::zero(3));
    CHECK(sq.square);
    CHECK(sq.determinant.value() == doctest::Approx(1.0));
    CHECK_FALSE(sq.singular);
    const std::vector<Point> same{sensors[0], pt({3, 0.1, 0})};
    CHECK(build_A0(sources, same, DriftFieldND::zero(3)).singular);
}

TEST_CASE("A0 with a linear drift matches the line integral") {
    // a(x) = G x with G = diag(1, 2, 0): phi = -1/2 int_0^1 (G (b + s d), d) ds, d = x - b
    DriftFieldND drift = DriftFieldND::zero(3);
    drift.gradient = Eigen::Vector3d(1.0, 2.0, 0.0).asDiagonal();
    const std::vector<Point> sources{pt({0.5, 0.2, 0.0})};
    const std::vector<Point> sensors{pt({1.0, -1.0, 0.3})};
    const auto a = build_A0(sources, sensors, drift);
    const Eigen::Vector3d b = sensors[0];
    const Eigen::Vector3d d = sources[0] - sensors[0];
    const double expect = -0.5 * oracle::integrate(
                                     [&](double s) {
                                         const Eigen::Vector3d y = b + s * d;
                                         return (drift.gradient * y).dot(d);
                                     },
                                     0.0, 1.0, 4);
    CHECK(a.phi(0, 0) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("sensor count sufficiency") {
    CHECK_FALSE(sufficiency_check(2, 4, 2));
    CHECK(sufficiency_check(2, 5, 2));
    CHECK_FALSE(sufficiency_check(2, 6, 3));
    CHECK(sufficiency_check(2, 7, 3));
    CHECK(sufficiency_check(1, 4, 3));
}

TEST_CASE("dipole field vanishes on the bisector only") {
    for (int n : {2, 3}) {
        const auto probes = bisector_probes(n);
        CHECK(probes.size() == 20);
        const std::vector<double> lambdas{1.0, 10.0};
        for (const auto& r : nonuniqueness_example1(n, 1.0, probes, lambdas)) {
            CHECK(r.discrepancy <= 1e-14 * r.reference);
            CHECK(std::abs(r.probe(0)) <= 1e-15);
        }
        Point off = probes.front();
        off(0) = 0.25;
        const auto rows = nonuniqueness_example1(n, 1.0, std::vector<Point>{off}, lambdas);
        for (const auto& r : rows) CHECK(r.discrepancy > 1e-6 * r.reference);
    }
    Point on_source = Point::Zero(3);
    on_source(0) = 1.0;
    CHECK_THROWS_AS(nonuniqueness_example1(3, 1.0, std::vector<Point>{on_source}, std::vector<double>{1.0}),
                    ValidationError);
}

TEST_CASE("two source pairs agree at the axis sensors") {
    const auto sensors = example2_sensors(3.0);
    REQUIRE(sensors.size() == 6);
    for (const auto& b : sensors) CHECK(b.norm() == doctest::Approx(3.0));
    const std::vector<Point> extra{pt({1.0, 2.0, 0.0}), pt({0.3, -0.2, 0.9})};
    const auto rows = nonuniqueness_example2(1.0, 3.0, std::vector<double>{1.0, 4.0}, extra);
    std::size_t extras = 0;
    for (const auto& r : rows) {
        if (r.probe_label.rfind("extra", 0) == 0) {
            ++extras;
            CHECK(r.discrepancy > 1e-6 * r.reference);
        } else {
            CHECK(r.discrepancy <= 1e-14 * r.reference);
        }
    }
    CHECK(extras == 4);
}
