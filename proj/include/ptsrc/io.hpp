#pragma once

// Scenario JSON and sensor CSV interchange.

#include "ptsrc/model.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace ptsrc {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Parses the scenario schema documented in README.md. Structural problems
/// (missing or mistyped fields) raise ValidationError; invariant checks are
/// left to validate_scenario.
Scenario scenario_from_json(const Json& j);
Json scenario_to_json(const Scenario& s);

Scenario load_scenario(const std::string& path);
Json load_json(const std::string& path);
/// Writes `j` with two-space indentation and a trailing newline.
void save_json(const Json& j, const std::string& path);

Json point_to_json(const Point& p);

struct SensorTable {
    TimeGrid grid;
    std::vector<std::vector<double>> columns;  ///< columns[j][k] = psi_{j+1}(t_k)
};

/// CSV with header `t,psi_1,...,psi_s`; values with 17 significant digits.
void write_sensor_csv(const std::string& path, const TimeGrid& grid, const std::vector<std::vector<double>>& columns);
SensorTable read_sensor_csv(const std::string& path);

}  // namespace ptsrc
