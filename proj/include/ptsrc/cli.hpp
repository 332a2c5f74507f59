#pragma once

// Command-line driver: simulate, identify, diagnose, reproduce-example.

#include "ptsrc/io.hpp"
#include "ptsrc/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ptsrc {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitValidation = 2,
    kExitSolver = 3,
    kExitIdentification = 4,
};

struct RunConfig {
    std::string command;
    std::string scenario_path;
    std::string out_dir = "out";
    std::string data_path;  ///< defaults to <out_dir>/sensors.csv
    std::optional<double> lambda_min;
    std::optional<double> lambda_max;
    std::optional<std::size_t> lambda_points;
    std::optional<std::string> epsilon;  ///< "auto" or a number
    std::optional<double> noise;
    std::optional<std::uint64_t> seed;
    std::string format = "json";
    int example = 1;
    double example_a = 1.0;
    double example_m = 3.0;
    int example_dimension = 3;
    std::optional<std::size_t> max_sources;
};

/// Noise-free sensor series of the scenario from the matching forward solver.
std::vector<std::vector<double>> forward_sensor_series(const Scenario& s);

/// Background-only series w0 at the sensors (sources removed).
std::vector<std::vector<double>> background_series(const Scenario& s);

/// Each command writes its outputs under config.out_dir and returns the main
/// report. Errors propagate as ValidationError, SolverError or
/// IdentificationError.
Json cmd_simulate(const RunConfig& config);
Json cmd_identify(const RunConfig& config);
Json cmd_diagnose(const RunConfig& config);
Json cmd_reproduce_example(const RunConfig& config);

/// Runs a configured command and maps exceptions to exit codes.
int execute(const RunConfig& config);

/// Parses argv and runs the selected command.
int run_cli(int argc, const char* const* argv);

}  // namespace ptsrc
