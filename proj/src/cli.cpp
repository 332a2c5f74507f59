#include "ptsrc/cli.hpp"

#include "ptsrc/forward.hpp"
#include "ptsrc/identify1d.hpp"
#include "ptsrc/identifynd.hpp"
#include "ptsrc/laplace.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>

namespace ptsrc {

namespace fs = std::filesystem;

namespace {

Scenario load_valid_scenario(const RunConfig& config) {
    if (config.scenario_path.empty()) {
        throw ValidationError("--scenario is required");
    }
    Scenario s = load_scenario(config.scenario_path);
    const auto violations = validate_scenario(s);
    if (!violations.empty()) {
        std::string msg = "scenario is invalid:";
        for (const auto& v : violations) {
            msg += "\n  " + v;
        }
        throw ValidationError(msg);
    }
    return s;
}

fs::path prepare_out(const RunConfig& config) {
    fs::path out(config.out_dir);
    fs::create_directories(out);
    return out;
}

bool boundary_is_zero(const BoundaryCondition& bc) {
    const auto& g = std::holds_alternative<Dirichlet>(bc) ? std::get<Dirichlet>(bc).g : std::get<Robin>(bc).g;
    return std::all_of(g.values.begin(), g.values.end(), [](double v) { return v == 0.0; });
}

double relative_l2(const std::vector<double>& est, const std::vector<double>& truth, std::size_t from) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = from; k < std::min(est.size(), truth.size()); ++k) {
        num += (est[k] - truth[k]) * (est[k] - truth[k]);
        den += truth[k] * truth[k];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

std::vector<double> lambda_list(double lo, double hi, std::size_t points) {
    return points < 2 || hi <= lo ? std::vector<double>{lo} : geometric_grid(lo, hi, points);
}

DeconvolutionOptions deconvolution_options(const RunConfig& config, const Scenario& s, double sigma) {
    DeconvolutionOptions opt;
    opt.noise_sigma = sigma;
    if (config.epsilon) {
        if (*config.epsilon == "auto") {
            opt.epsilon.reset();
        } else {
            try {
                std::size_t used = 0;
                opt.epsilon = std::stod(*config.epsilon, &used);
                if (used != config.epsilon->size() || *opt.epsilon < 0.0) {
                    throw std::invalid_argument("");
                }
            } catch (const std::exception&) {
                throw ValidationError("--epsilon must be 'auto' or a nonnegative number");
            }
        }
    } else if (s.identification.epsilon_auto) {
        opt.epsilon.reset();
    } else if (s.identification.epsilon) {
        opt.epsilon = *s.identification.epsilon;
    } else if (sigma > 0.0) {
        opt.epsilon.reset();
    } else {
        opt.epsilon = 0.0;
    }
    return opt;
}

Json deconvolution_json(const DeconvolutionResult& d) {
    return {{"epsilon", d.epsilon},
            {"residual_norm", d.residual_norm},
            {"seminorm", d.seminorm},
            {"coarsening", d.coarsening},
            {"unknowns", d.unknowns}};
}

void write_intensity_csv(const fs::path& path, const TimeGrid& grid, const std::vector<std::vector<double>>& cols) {
    std::ofstream os(path);
    os << 't';
    for (std::size_t j = 0; j < cols.size(); ++j) {
        os << (cols.size() == 1 ? ",q_hat" : fmt::format(",q_hat_{}", j + 1));
    }
    os << '\n';
    for (std::size_t k = 0; k < grid.size(); ++k) {
        os << fmt::format("{:.17g}", grid.time(k));
        for (const auto& c : cols) {
            os << fmt::format(",{:.17g}", c[k]);
        }
        os << '\n';
    }
}

Json identify_1d(const RunConfig& config, const Scenario& s, const TimeGrid& grid,
                 const std::vector<std::vector<double>>& psi, double sigma, const fs::path& out) {
    if (s.sensors.size() != 2) {
        throw IdentificationError("identify1d", "the 1D pipeline uses exactly two sensors");
    }
    std::size_t i1 = 0;
    std::size_t i2 = 1;
    if (s.sensors[1][0] < s.sensors[0][0]) {
        std::swap(i1, i2);
    }
    const double b1 = s.sensors[i1][0];
    const double b2 = s.sensors[i2][0];

    std::optional<CoefficientField1D> coeffs;
    Branch branch = Branch::Interior;
    if (const auto* iv = std::get_if<Interval1D>(&s.domain)) {
        if (!s.coefficients) {
            throw ValidationError("coefficients: required for an interval domain");
        }
        coeffs = *s.coefficients;
        const auto neumann = [](const BoundaryCondition& bc) {
            const auto* r = std::get_if<Robin>(&bc);
            return r && r->sigma == 0.0;
        };
        if (b1 == iv->a && neumann(iv->left)) {
            branch = Branch::LeftBoundary;
        } else if (b2 == iv->b && neumann(iv->right)) {
            branch = Branch::RightBoundary;
        }
    } else {
        const double reaction = std::get<FreeSpace>(s.domain).reaction;
        coeffs = CoefficientField1D::constant(b1 - 1.0, b2 + 1.0, 1.0, 0.0, reaction);
    }

    const double gap = coeffs->integral_r(b1, b2);
    double lmin = 0.0;
    double lmax = 0.0;
    std::size_t points = config.lambda_points.value_or(s.identification.lambda_points.value_or(12));
    std::string rationale = "lambda window from configuration";
    const auto cli_or_scenario = [](const std::optional<double>& a, const std::optional<double>& b) {
        return a ? a : b;
    };
    const auto cfg_min = cli_or_scenario(config.lambda_min, s.identification.lambda_min);
    const auto cfg_max = cli_or_scenario(config.lambda_max, s.identification.lambda_max);
    if (!cfg_min || !cfg_max) {
        const LambdaAdvice adv = lambda_grid_advisor(grid, 0.5 * gap, 0.05, points);
        lmin = cfg_min.value_or(adv.lambda_min);
        lmax = cfg_max.value_or(adv.lambda_max);
        rationale = adv.rationale;
    } else {
        lmin = *cfg_min;
        lmax = *cfg_max;
    }
    const std::vector<double> lambdas = lambda_list(lmin, lmax, points);
    const LaplaceSamples phi1 = laplace_grid(psi[i1], grid, lambdas, fmt::format("psi_{}", i1 + 1));
    const LaplaceSamples phi2 = laplace_grid(psi[i2], grid, lambdas, fmt::format("psi_{}", i2 + 1));

    const AFit afit = estimate_A(phi1, phi2);
    const Location1D loc = locate_1d(phi1, phi2, *coeffs, b1, b2, branch);
    const double bound = admissibility_bound(*coeffs, b1, b2);

    std::vector<std::string> diagnostics = loc.warnings;
    const double m_hat = coeffs->integral_r(b1, loc.x1_hat);
    const double consistency = afit.A + m_hat - bound;
    diagnostics.push_back(fmt::format("A + int_b1^x1 r - (1/2) int_b1^b2 r = {:.3e} (fit residual {:.3e})",
                                      consistency, afit.residual));
    if (std::abs(afit.A) >= bound) {
        diagnostics.emplace_back("|A| violates the admissibility bound; the source is not bracketed");
    }

    const double d1 = std::abs(coeffs->integral_r(loc.x1_hat, b1));
    const double d2 = std::abs(coeffs->integral_r(loc.x1_hat, b2));
    const std::size_t near = d1 <= d2 ? i1 : i2;
    const IntensityRecovery intensity = recover_intensity_1d(psi[near], grid, *coeffs, loc.x1_hat,
                                                             s.sensors[near][0],
                                                             deconvolution_options(config, s, sigma));
    if (!coeffs->a2_is_constant() || s.coefficients.has_value()) {
        diagnostics.emplace_back("intensity amplitude uses the leading-order kernel");
    }

    Json per_lambda = Json::array();
    for (const auto& e : loc.per_lambda) {
        Json row = {{"lambda", e.lambda}, {"m", e.m}, {"weight", e.weight}, {"bracketed", e.bracketed}};
        row["x1"] = e.bracketed ? Json(e.x1) : Json(nullptr);
        per_lambda.push_back(row);
    }
    Json report = {{"schema_version", kSchemaVersion},
                   {"command", "identify"},
                   {"status", "ok"},
                   {"dimension", 1},
                   {"x1_hat", loc.x1_hat},
                   {"A_hat", afit.A},
                   {"A_fit", {{"slope", afit.slope}, {"residual", afit.residual}, {"skipped_nonpositive",
                                                                                    afit.skipped_nonpositive}}},
                   {"admissible", std::abs(afit.A) < bound},
                   {"admissibility_bound", bound},
                   {"branch", to_string(loc.branch)},
                   {"sensors", {b1, b2}},
                   {"lambda_grid", {{"min", lmin}, {"max", lmax}, {"points", lambdas.size()}, {"rationale",
                                                                                            rationale}}},
                   {"per_lambda", per_lambda},
                   {"intensity",
                    {{"sensor", near + 1},
                     {"delta0", intensity.delta0},
                     {"amplitude", intensity.amplitude},
                     {"decay", intensity.decay},
                     {"deconvolution", deconvolution_json(intensity.deconvolution)}}},
                   {"q_hat", intensity.q},
                   {"diagnostics", diagnostics}};
    if (!s.sources.empty()) {
        const auto truth = s.sources.front().sample(grid);
        report["evaluation"] = {
            {"location_error", std::abs(loc.x1_hat - s.sources.front().location[0])},
            {"intensity_relative_l2", relative_l2(intensity.q, truth, grid.steps / 10)},
        };
    }
    if (config.format == "csv") {
        write_intensity_csv(out / "q_hat.csv", grid, {intensity.q});
        std::ofstream os(out / "per_lambda.csv");
        os << "lambda,m,x1,weight,bracketed\n";
        for (const auto& e : loc.per_lambda) {
            os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{}\n", e.lambda, e.m, e.x1, e.weight,
                              e.bracketed ? 1 : 0);
        }
    }
    return report;
}

Json identify_nd(const RunConfig& config, const Scenario& s, const TimeGrid& grid,
                 const std::vector<std::vector<double>>& psi, double sigma, const fs::path& out) {
    const int n = s.dimension();
    const double reaction = std::get<FreeSpace>(s.domain).reaction;
    std::vector<SensorRecord> records;
    for (std::size_t j = 0; j < s.sensors.size(); ++j) {
        records.push_back({s.sensors[j], psi[j], grid});
    }
    LocateOptions opt;
    opt.lambda_min = config.lambda_min ? config.lambda_min : s.identification.lambda_min;
    opt.lambda_max = config.lambda_max ? config.lambda_max : s.identification.lambda_max;
    opt.reaction = reaction;
    const RecoveryND rec = locate_nd(records, n, opt);
    const IntensityND q = recover_intensity_nd(records, rec.alphas, n, reaction,
                                               deconvolution_options(config, s, sigma));

    const std::vector<Point> estimate{rec.x1_hat};
    const A0Matrix a0 = build_A0(estimate, s.sensors, s.drift.value_or(DriftFieldND::zero(n)));

    Json d_table = Json::array();
    for (Eigen::Index i = 0; i < rec.d.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < rec.d.cols(); ++j) {
            d_table.push_back({{"i", i + 1}, {"j", j + 1}, {"d", rec.d(i, j)}, {"uncertainty", rec.uncertainty(i, j)}});
        }
    }
    Json witness = Json::array();
    for (auto w : rec.condition_d.witness) {
        witness.push_back(w + 1);
    }
    Json report = {{"schema_version", kSchemaVersion},
                   {"command", "identify"},
                   {"status", "ok"},
                   {"dimension", n},
                   {"x1_hat", point_to_json(rec.x1_hat)},
                   {"alpha", rec.alphas},
                   {"d", d_table},
                   {"degenerate", rec.degenerate},
                   {"pair", {rec.pair_i + 1, rec.pair_j + 1}},
                   {"rho_eff", rec.rho_eff},
                   {"alpha_ladder", rec.ladder},
                   {"condition_D", {{"holds", rec.condition_d.holds}, {"witness", witness}}},
                   {"A0", {{"rows", a0.entries.rows()}, {"cols", a0.entries.cols()}, {"square", a0.square}}},
                   {"multilateration",
                    {{"residuals", rec.fit.residuals},
                     {"rms_residual", rec.fit.rms_residual},
                     {"condition_number", rec.fit.condition_number},
                     {"inconsistent", rec.fit.inconsistent}}},
                   {"q_hat", q.q},
                   {"q_hat_per_sensor", q.per_sensor},
                   {"q_reference_sensor", q.reference + 1},
                   {"cross_sensor_spread", q.spread},
                   {"spread_flagged", q.flagged},
                   {"diagnostics", rec.diagnostics}};
    report["A0"]["determinant"] = a0.determinant ? Json(*a0.determinant) : Json(nullptr);
    if (!s.sources.empty()) {
        const auto truth = s.sources.front().sample(grid);
        report["evaluation"] = {
            {"location_error", (rec.x1_hat - s.sources.front().location).norm()},
            {"intensity_relative_l2", relative_l2(q.q, truth, grid.steps / 10)},
        };
    }
    if (config.format == "csv") {
        write_intensity_csv(out / "q_hat.csv", grid, q.per_sensor);
        std::ofstream os(out / "alpha.csv");
        os << "sensor,alpha\n";
        for (std::size_t j = 0; j < rec.alphas.size(); ++j) {
            os << fmt::format("{},{:.17g}\n", j + 1, rec.alphas[j]);
        }
    }
    return report;
}

}  // namespace

std::vector<std::vector<double>> forward_sensor_series(const Scenario& s) {
    if (std::holds_alternative<Interval1D>(s.domain)) {
        return crank_nicolson_1d(s, {}, false).traces;
    }
    const auto& fsd = std::get<FreeSpace>(s.domain);
    const std::vector<double> w0 = free_space_background(s.background, s.grid, fsd.reaction);
    std::vector<std::vector<double>> out;
    for (const auto& b : s.sensors) {
        std::vector<double> psi = free_space_response(s.sources, b, s.grid, fsd.dimension, fsd.reaction);
        for (std::size_t k = 0; k < psi.size(); ++k) {
            psi[k] += w0[k];
        }
        out.push_back(std::move(psi));
    }
    return out;
}

std::vector<std::vector<double>> background_series(const Scenario& s) {
    if (const auto* iv = std::get_if<Interval1D>(&s.domain)) {
        if (s.background.is_zero() && boundary_is_zero(iv->left) && boundary_is_zero(iv->right)) {
            return std::vector<std::vector<double>>(s.sensors.size(), std::vector<double>(s.grid.size(), 0.0));
        }
        Scenario bg = s;
        bg.sources.clear();
        return crank_nicolson_1d(bg, {}, false).traces;
    }
    const auto& fsd = std::get<FreeSpace>(s.domain);
    return std::vector<std::vector<double>>(s.sensors.size(),
                                            free_space_background(s.background, s.grid, fsd.reaction));
}

Json cmd_simulate(const RunConfig& config) {
    Scenario s = load_valid_scenario(config);
    if (config.noise) {
        if (*config.noise < 0.0) {
            throw ValidationError("--noise must be nonnegative");
        }
        s.noise.sigma = *config.noise;
    }
    if (config.seed) {
        s.noise.seed = *config.seed;
    }
    std::vector<std::vector<double>> psi = forward_sensor_series(s);
    if (s.noise.sigma > 0.0) {
        std::mt19937_64 rng(s.noise.seed);
        std::normal_distribution<double> gauss(0.0, s.noise.sigma);
        for (std::size_t k = 0; k < s.grid.size(); ++k) {
            for (auto& col : psi) {
                col[k] += gauss(rng);
            }
        }
    }
    const fs::path out = prepare_out(config);
    write_sensor_csv((out / "sensors.csv").string(), s.grid, psi);

    Json truth = scenario_to_json(s);
    truth["command"] = "simulate";
    truth["solver"] = std::holds_alternative<Interval1D>(s.domain) ? "crank_nicolson_1d" : "free_space_response";
    save_json(truth, (out / "truth.json").string());
    return truth;
}

Json cmd_identify(const RunConfig& config) {
    const Scenario s = load_valid_scenario(config);
    const fs::path out = prepare_out(config);
    const std::string data = config.data_path.empty() ? (out / "sensors.csv").string() : config.data_path;
    SensorTable table = read_sensor_csv(data);
    if (table.columns.size() != s.sensors.size()) {
        throw ValidationError(fmt::format("{}: {} sensor columns but the scenario lists {} sensors", data,
                                          table.columns.size(), s.sensors.size()));
    }
    if (table.grid.steps != s.grid.steps || std::abs(table.grid.tau - s.grid.tau) > 1e-9 * s.grid.tau) {
        throw ValidationError(data + ": time column does not match the scenario time grid");
    }
    const TimeGrid grid = s.grid;
    const double sigma = config.noise.value_or(s.noise.sigma);

    std::vector<std::vector<double>> psi = table.columns;
    const auto w0 = background_series(s);
    for (std::size_t j = 0; j < psi.size(); ++j) {
        for (std::size_t k = 0; k < psi[j].size(); ++k) {
            psi[j][k] -= w0[j][k];
        }
    }

    Json report;
    try {
        report = s.dimension() == 1 ? identify_1d(config, s, grid, psi, sigma, out)
                                    : identify_nd(config, s, grid, psi, sigma, out);
    } catch (const IdentificationError& e) {
        Json failure = {{"schema_version", kSchemaVersion},
                        {"command", "identify"},
                        {"status", "failed"},
                        {"stage", e.stage()},
                        {"error", e.what()}};
        if (e.stage() == "condition_D") {
            std::vector<std::size_t> witness;
            for (auto i : condition_D_check(s.sensors, s.dimension()).witness) witness.push_back(i + 1);
            failure["witness"] = witness;
        }
        save_json(failure, (out / "report.json").string());
        throw;
    }
    save_json(report, (out / "report.json").string());
    return report;
}

Json cmd_diagnose(const RunConfig& config) {
    const Scenario s = load_valid_scenario(config);
    const fs::path out = prepare_out(config);
    const int n = s.dimension();
    std::vector<Point> sources;
    for (const auto& src : s.sources) {
        sources.push_back(src.location);
    }
    std::vector<std::string> reasons;
    Json checks = Json::object();

    if (n == 1) {
        Interval1D dom;
        if (const auto* iv = std::get_if<Interval1D>(&s.domain)) {
            dom = *iv;
        } else {
            dom.a = -std::numeric_limits<double>::infinity();
            dom.b = std::numeric_limits<double>::infinity();
        }
        std::vector<double> xs;
        std::vector<double> bs;
        for (const auto& p : sources) xs.push_back(p[0]);
        for (const auto& p : s.sensors) bs.push_back(p[0]);
        Json findings = Json::array();
        for (const auto& f : alternation_diagnostic(xs, bs, dom)) {
            findings.push_back({{"condition", f.condition}, {"detail", f.detail}});
            reasons.push_back(fmt::format("non-unique (alternation condition {})", f.condition));
        }
        checks["alternation"] = {{"triggered", findings}};
    } else {
        const ConditionD cd = condition_D_check(s.sensors, n);
        Json witness = Json::array();
        for (auto w : cd.witness) {
            witness.push_back(w + 1);
        }
        checks["condition_D"] = {{"holds", cd.holds}, {"witness", witness}};
        if (!cd.holds) {
            std::string list;
            for (auto w : cd.witness) {
                list += (list.empty() ? "" : ", ") + std::to_string(w + 1);
            }
            reasons.push_back(fmt::format("non-unique (condition (D) fails for sensors {{{}}})", list));
        }
        const std::size_t r = config.max_sources.value_or(std::max<std::size_t>(sources.size(), 1));
        const bool enough = sufficiency_check(r, s.sensors.size(), n);
        checks["sufficiency"] = {{"sources_bound", r},
                                 {"sensors", s.sensors.size()},
                                 {"required", n == 2 ? 2 * r + 1 : 3 * r + 1},
                                 {"sufficient", enough}};
        if (!enough) {
            reasons.push_back(fmt::format("insufficient measurements for {} constant sources", r));
        }
        if (!sources.empty()) {
            const A0Matrix a0 = build_A0(sources, s.sensors, s.drift.value_or(DriftFieldND::zero(n)));
            Json rows = Json::array();
            for (Eigen::Index j = 0; j < a0.entries.rows(); ++j) {
                Json row = Json::array();
                for (Eigen::Index i = 0; i < a0.entries.cols(); ++i) {
                    row.push_back(a0.entries(j, i));
                }
                rows.push_back(row);
            }
            checks["A0"] = {{"entries", rows}, {"square", a0.square}, {"singular", a0.singular}};
            checks["A0"]["determinant"] = a0.determinant ? Json(*a0.determinant) : Json(nullptr);
            if (a0.square && a0.singular) {
                reasons.emplace_back("det A0 vanishes");
            }
        }
    }
    std::string verdict = "no obstruction detected";
    if (!reasons.empty()) {
        verdict = reasons.front();
        for (std::size_t k = 1; k < reasons.size(); ++k) {
            verdict += "; " + reasons[k];
        }
    }
    Json report = {{"schema_version", kSchemaVersion},
                   {"command", "diagnose"},
                   {"dimension", n},
                   {"verdict", verdict},
                   {"identifiable", reasons.empty()},
                   {"checks", checks}};
    save_json(report, (out / "diagnostics.json").string());
    return report;
}

Json cmd_reproduce_example(const RunConfig& config) {
    if (config.example != 1 && config.example != 2) {
        throw ValidationError("reproduce-example: expected 1 or 2");
    }
    const fs::path out = prepare_out(config);
    std::vector<double> lambdas{1.0, 10.0, 100.0};
    if (config.lambda_min && config.lambda_max) {
        lambdas = lambda_list(*config.lambda_min, *config.lambda_max, config.lambda_points.value_or(3));
    }
    std::vector<ExampleRow> rows;
    Json summary = {{"schema_version", kSchemaVersion}, {"command", "reproduce-example"}, {"example", config.example},
                    {"lambdas", lambdas}};
    if (config.example == 1) {
        const int n = config.example_dimension;
        const auto probes = bisector_probes(n);
        rows = nonuniqueness_example1(n, config.example_a, probes, lambdas);
        double worst = 0.0;
        for (const auto& r : rows) {
            worst = std::max(worst, r.discrepancy / r.reference);
        }
        summary["dimension"] = n;
        summary["a"] = config.example_a;
        summary["probes"] = probes.size();
        summary["max_relative_discrepancy"] = worst;
    } else {
        Point seventh(3);
        seventh << 1.0, 2.0, 0.0;
        rows = nonuniqueness_example2(config.example_a, config.example_m, lambdas, std::vector<Point>{seventh});
        double six = 0.0;
        double extra = std::numeric_limits<double>::infinity();
        double scale = 0.0;
        for (const auto& r : rows) {
            scale = std::max(scale, r.reference);
            if (r.probe_label.rfind("extra", 0) == 0) {
                extra = std::min(extra, r.discrepancy);
            } else {
                six = std::max(six, r.discrepancy);
            }
        }
        const double floor = std::numeric_limits<double>::epsilon() * scale;
        summary["a"] = config.example_a;
        summary["M"] = config.example_m;
        summary["six_point_max"] = six;
        summary["seventh_probe_min"] = extra;
        summary["separation_factor"] = extra / std::max(six, floor);
    }
    {
        std::ofstream os(out / fmt::format("example{}.csv", config.example));
        os << "probe,x,y,z,lambda,discrepancy,reference\n";
        for (const auto& r : rows) {
            const double z = r.probe.size() > 2 ? r.probe(2) : 0.0;
            os << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.probe_label, r.probe(0),
                              r.probe(1), z, r.lambda, r.discrepancy, r.reference);
        }
    }
    save_json(summary, (out / fmt::format("example{}_summary.json", config.example)).string());
    return summary;
}

int execute(const RunConfig& config) {
    try {
        Json result;
        if (config.command == "simulate") {
            result = cmd_simulate(config);
        } else if (config.command == "identify") {
            result = cmd_identify(config);
        } else if (config.command == "diagnose") {
            result = cmd_diagnose(config);
        } else if (config.command == "reproduce-example") {
            result = cmd_reproduce_example(config);
        } else {
            std::cerr << "unknown command: " << config.command << '\n';
            return kExitUsage;
        }
        if (config.command == "diagnose") {
            std::cout << result["verdict"].get<std::string>() << '\n';
        }
        return kExitOk;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const IdentificationError& e) {
        std::cerr << "identification failed in " << e.what() << '\n';
        return kExitIdentification;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Point-source identification for parabolic equations"};
    app.require_subcommand(1);
    RunConfig cfg;
    std::optional<double> lmin;
    std::optional<double> lmax;
    std::optional<std::size_t> lpoints;
    std::optional<std::string> eps;
    std::optional<double> noise;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> max_sources;

    const auto common = [&](CLI::App* sub, bool needs_scenario) {
        auto* opt = sub->add_option("--scenario", cfg.scenario_path, "scenario JSON");
        if (needs_scenario) {
            opt->required();
        }
        sub->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
        sub->add_option("--lambda-min", lmin, "smallest transform parameter");
        sub->add_option("--lambda-max", lmax, "largest transform parameter");
        sub->add_option("--lambda-points", lpoints, "number of transform parameters");
        sub->add_option("--epsilon", eps, "regularization weight or 'auto'");
        sub->add_option("--noise", noise, "noise standard deviation");
        sub->add_option("--seed", seed, "noise seed");
        sub->add_option("--format", cfg.format, "report format")
            ->check(CLI::IsMember({"json", "csv"}))
            ->capture_default_str();
    };
    auto* sim = app.add_subcommand("simulate", "generate sensor series from a scenario");
    common(sim, true);
    auto* ident = app.add_subcommand("identify", "recover source location and intensity");
    common(ident, true);
    ident->add_option("--data", cfg.data_path, "sensor CSV (default <out>/sensors.csv)");
    auto* diag = app.add_subcommand("diagnose", "identifiability checks");
    common(diag, true);
    diag->add_option("--max-sources", max_sources, "upper bound on the number of sources");
    auto* repro = app.add_subcommand("reproduce-example", "non-uniqueness examples");
    common(repro, false);
    repro->add_option("which", cfg.example, "1 or 2")->required()->check(CLI::IsMember({1, 2}));
    repro->add_option("--a", cfg.example_a, "source offset")->capture_default_str();
    repro->add_option("--M", cfg.example_m, "axis probe distance")->capture_default_str();
    repro->add_option("--dimension", cfg.example_dimension, "2 or 3 (example 1)")
        ->check(CLI::IsMember({2, 3}))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }
    for (auto* sub : {sim, ident, diag, repro}) {
        if (sub->parsed()) {
            cfg.command = sub->get_name();
        }
    }
    cfg.lambda_min = lmin;
    cfg.lambda_max = lmax;
    cfg.lambda_points = lpoints;
    cfg.epsilon = eps;
    cfg.noise = noise;
    cfg.seed = seed;
    cfg.max_sources = max_sources;
    return execute(cfg);
}

}  // namespace ptsrc
