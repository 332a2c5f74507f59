#include "ptsrc/io.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <sstream>

namespace ptsrc {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw ValidationError(field + ": " + what);
}

const Json& require(const Json& j, const char* key, const std::string& field) {
    if (!j.is_object() || !j.contains(key)) {
        fail(field.empty() ? key : field + "." + key, "missing");
    }
    return j.at(key);
}

double number(const Json& j, const std::string& field) {
    if (!j.is_number()) {
        fail(field, "expected a number");
    }
    return j.get<double>();
}

std::vector<double> numbers(const Json& j, const std::string& field) {
    if (j.is_number()) {
        return {j.get<double>()};
    }
    if (!j.is_array() || j.empty()) {
        fail(field, "expected a number or a nonempty array of numbers");
    }
    std::vector<double> v;
    for (const auto& e : j) {
        v.push_back(number(e, field));
    }
    return v;
}

Point point(const Json& j, const std::string& field) {
    const std::vector<double> v = numbers(j, field);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Json series(const std::vector<double>& v) {
    return v.size() == 1 ? Json(v.front()) : Json(v);
}

BoundaryCondition boundary_from_json(const Json& j, const std::string& field) {
    const std::string type = require(j, "type", field).get<std::string>();
    TimeSeriesValue g;
    if (j.contains("g")) {
        g.values = numbers(j.at("g"), field + ".g");
    }
    if (type == "dirichlet") {
        return Dirichlet{g};
    }
    if (type == "robin" || type == "neumann") {
        const double sigma = type == "robin" ? number(require(j, "sigma", field), field + ".sigma") : 0.0;
        return Robin{sigma, g};
    }
    fail(field + ".type", "expected dirichlet, robin or neumann");
}

Json boundary_to_json(const BoundaryCondition& bc) {
    if (const auto* d = std::get_if<Dirichlet>(&bc)) {
        return {{"type", "dirichlet"}, {"g", series(d->g.values)}};
    }
    const auto& r = std::get<Robin>(bc);
    return {{"type", "robin"}, {"sigma", r.sigma}, {"g", series(r.g.values)}};
}

}  // namespace

Json point_to_json(const Point& p) {
    return Json(std::vector<double>(p.data(), p.data() + p.size()));
}

Scenario scenario_from_json(const Json& j) {
    if (!j.is_object()) {
        fail("scenario", "expected a JSON object");
    }
    Scenario s;
    const Json& dom = require(j, "domain", "");
    const std::string type = require(dom, "type", "domain").get<std::string>();
    if (type == "interval") {
        Interval1D iv;
        iv.a = number(require(dom, "a", "domain"), "domain.a");
        iv.b = number(require(dom, "b", "domain"), "domain.b");
        if (dom.contains("left")) {
            iv.left = boundary_from_json(dom.at("left"), "domain.left");
        }
        if (dom.contains("right")) {
            iv.right = boundary_from_json(dom.at("right"), "domain.right");
        }
        s.domain = iv;
    } else if (type == "free_space") {
        FreeSpace fs;
        fs.dimension = require(dom, "dimension", "domain").get<int>();
        fs.reaction = dom.value("reaction", 0.0);
        s.domain = fs;
    } else {
        fail("domain.type", "expected interval or free_space");
    }

    if (j.contains("coefficients")) {
        const Json& c = j.at("coefficients");
        double a = 0.0;
        double b = 0.0;
        if (const auto* iv = std::get_if<Interval1D>(&s.domain)) {
            a = c.value("a", iv->a);
            b = c.value("b", iv->b);
        } else {
            a = number(require(c, "a", "coefficients"), "coefficients.a");
            b = number(require(c, "b", "coefficients"), "coefficients.b");
        }
        s.coefficients.emplace(a, b, numbers(require(c, "a2", "coefficients"), "coefficients.a2"),
                               c.contains("a1") ? numbers(c.at("a1"), "coefficients.a1") : std::vector<double>{0.0},
                               c.contains("a0") ? numbers(c.at("a0"), "coefficients.a0") : std::vector<double>{0.0},
                               c.value("degree", 3));
    }

    const int n = dimension_of(s.domain);
    if (j.contains("drift")) {
        const Json& d = j.at("drift");
        DriftFieldND drift = DriftFieldND::zero(n);
        if (d.contains("constant")) {
            drift.constant = point(d.at("constant"), "drift.constant");
        }
        if (d.contains("gradient")) {
            const Json& g = d.at("gradient");
            if (!g.is_array() || g.size() != static_cast<std::size_t>(n)) {
                fail("drift.gradient", "expected an n x n array");
            }
            for (int r = 0; r < n; ++r) {
                const Point row = point(g.at(static_cast<std::size_t>(r)), "drift.gradient");
                if (row.size() != n) {
                    fail("drift.gradient", "expected an n x n array");
                }
                drift.gradient.row(r) = row.transpose();
            }
        }
        s.drift = drift;
    }

    if (j.contains("sources")) {
        for (const auto& src : j.at("sources")) {
            PointSource p;
            p.location = point(require(src, "location", "sources"), "sources.location");
            if (src.contains("intensity")) {
                const Json& q = src.at("intensity");
                if (q.is_number()) {
                    p.intensity = ConstantIntensity{q.get<double>()};
                } else {
                    p.intensity = SampledIntensity{numbers(q, "sources.intensity")};
                }
            }
            s.sources.push_back(std::move(p));
        }
    }
    for (const auto& b : require(j, "sensors", "")) {
        s.sensors.push_back(point(b, "sensors"));
    }

    const Json& tg = require(j, "time_grid", "");
    s.grid.tau = number(require(tg, "tau", "time_grid"), "time_grid.tau");
    const Json& steps = require(tg, "steps", "time_grid");
    if (!steps.is_number_integer() || steps.get<long long>() < 0) {
        fail("time_grid.steps", "expected a nonnegative integer");
    }
    s.grid.steps = steps.get<std::size_t>();

    if (j.contains("noise")) {
        s.noise.sigma = j.at("noise").value("sigma", 0.0);
        s.noise.seed = j.at("noise").value("seed", std::uint64_t{0});
    }
    if (j.contains("background")) {
        const Json& bg = j.at("background");
        if (bg.contains("u0")) {
            s.background.u0 = numbers(bg.at("u0"), "background.u0");
        }
        s.background.f0 = bg.value("f0", 0.0);
    }
    if (j.contains("fd_spacing")) {
        s.fd_spacing = number(j.at("fd_spacing"), "fd_spacing");
    }
    if (j.contains("identification")) {
        const Json& id = j.at("identification");
        if (id.contains("lambda_min")) s.identification.lambda_min = number(id.at("lambda_min"), "identification.lambda_min");
        if (id.contains("lambda_max")) s.identification.lambda_max = number(id.at("lambda_max"), "identification.lambda_max");
        if (id.contains("lambda_points")) s.identification.lambda_points = id.at("lambda_points").get<std::size_t>();
        if (id.contains("epsilon")) {
            const Json& e = id.at("epsilon");
            if (e.is_string() && e.get<std::string>() == "auto") {
                s.identification.epsilon_auto = true;
            } else {
                s.identification.epsilon = number(e, "identification.epsilon");
            }
        }
    }
    return s;
}

Json scenario_to_json(const Scenario& s) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    if (const auto* iv = std::get_if<Interval1D>(&s.domain)) {
        j["domain"] = {{"type", "interval"},
                       {"a", iv->a},
                       {"b", iv->b},
                       {"left", boundary_to_json(iv->left)},
                       {"right", boundary_to_json(iv->right)}};
    } else {
        const auto& fs = std::get<FreeSpace>(s.domain);
        j["domain"] = {{"type", "free_space"}, {"dimension", fs.dimension}, {"reaction", fs.reaction}};
    }
    if (s.coefficients) {
        const auto& c = *s.coefficients;
        j["coefficients"] = {{"a", c.left()},
                             {"b", c.right()},
                             {"a2", series(c.a2_samples())},
                             {"a1", series(c.a1_samples())},
                             {"a0", series(c.a0_samples())},
                             {"degree", c.degree()}};
    }
    if (s.drift) {
        Json rows = Json::array();
        for (Eigen::Index r = 0; r < s.drift->gradient.rows(); ++r) {
            rows.push_back(point_to_json(s.drift->gradient.row(r).transpose()));
        }
        j["drift"] = {{"constant", point_to_json(s.drift->constant)}, {"gradient", rows}};
    }
    j["sources"] = Json::array();
    for (const auto& src : s.sources) {
        Json q;
        if (const auto* c = std::get_if<ConstantIntensity>(&src.intensity)) {
            q = c->q;
        } else {
            q = std::get<SampledIntensity>(src.intensity).values;
        }
        j["sources"].push_back({{"location", point_to_json(src.location)}, {"intensity", q}});
    }
    j["sensors"] = Json::array();
    for (const auto& b : s.sensors) {
        j["sensors"].push_back(point_to_json(b));
    }
    j["time_grid"] = {{"tau", s.grid.tau}, {"steps", s.grid.steps}};
    j["noise"] = {{"sigma", s.noise.sigma}, {"seed", s.noise.seed}};
    j["background"] = {{"u0", series(s.background.u0)}, {"f0", s.background.f0}};
    if (s.fd_spacing) {
        j["fd_spacing"] = *s.fd_spacing;
    }
    Json id = Json::object();
    if (s.identification.lambda_min) id["lambda_min"] = *s.identification.lambda_min;
    if (s.identification.lambda_max) id["lambda_max"] = *s.identification.lambda_max;
    if (s.identification.lambda_points) id["lambda_points"] = *s.identification.lambda_points;
    if (s.identification.epsilon_auto) {
        id["epsilon"] = "auto";
    } else if (s.identification.epsilon) {
        id["epsilon"] = *s.identification.epsilon;
    }
    if (!id.empty()) {
        j["identification"] = id;
    }
    return j;
}

Json load_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw ValidationError("cannot open " + path);
    }
    try {
        return Json::parse(is);
    } catch (const Json::parse_error& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

Scenario load_scenario(const std::string& path) {
    const Json j = load_json(path);
    try {
        return scenario_from_json(j);
    } catch (const Json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

void save_json(const Json& j, const std::string& path) {
    std::ofstream os(path);
    if (!os) {
        throw std::runtime_error("cannot write " + path);
    }
    os << j.dump(2) << '\n';
}

void write_sensor_csv(const std::string& path, const TimeGrid& grid,
                      const std::vector<std::vector<double>>& columns) {
    std::ofstream os(path);
    if (!os) {
        throw std::runtime_error("cannot write " + path);
    }
    os << 't';
    for (std::size_t j = 0; j < columns.size(); ++j) {
        os << ",psi_" << j + 1;
    }
    os << '\n';
    std::string line;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        line = fmt::format("{:.17g}", grid.time(k));
        for (const auto& c : columns) {
            line += fmt::format(",{:.17g}", c.at(k));
        }
        line += '\n';
        os << line;
    }
}

SensorTable read_sensor_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw ValidationError("cannot open " + path);
    }
    std::string line;
    if (!std::getline(is, line)) {
        throw ValidationError(path + ": empty file");
    }
    std::size_t cols = 0;
    {
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        if (cell != "t") {
            throw ValidationError(path + ": header must start with t");
        }
        while (std::getline(ss, cell, ',')) {
            if (cell != fmt::format("psi_{}", cols + 1)) {
                throw ValidationError(path + ": header must read t,psi_1,...,psi_s");
            }
            ++cols;
        }
    }
    SensorTable table;
    table.columns.assign(cols, {});
    std::vector<double> times;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str()) {
                throw ValidationError(fmt::format("{}: row {}: not a number '{}'", path, row, cell));
            }
            vals.push_back(v);
        }
        if (vals.size() != cols + 1) {
            throw ValidationError(fmt::format("{}: row {} has {} fields, expected {}", path, row, vals.size(), cols + 1));
        }
        times.push_back(vals[0]);
        for (std::size_t j = 0; j < cols; ++j) {
            table.columns[j].push_back(vals[j + 1]);
        }
    }
    if (times.size() < 3) {
        throw ValidationError(path + ": need at least three samples");
    }
    const double tau = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (std::abs(times[k] - tau * static_cast<double>(k)) > 1e-9 * std::max(1.0, times.back())) {
            throw ValidationError(path + ": time column must be uniform and start at 0");
        }
    }
    table.grid = {tau, times.size() - 1};
    return table;
}

}  // namespace ptsrc
