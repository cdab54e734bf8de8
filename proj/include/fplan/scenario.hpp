#pragma once

#include <string>

#include "fplan/frenet.hpp"
#include "fplan/sim.hpp"

namespace fplan {

struct BasisConfig {
    int degree = 10;
    double horizon = 6.0;
    int samples = 30;
};

/// Everything a run needs besides the scene itself. Defaults are overridden
/// first by a --config file and then by the scenario's own override blocks.
struct RunConfig {
    BasisConfig basis;
    PlannerConfig planner;
    SimConfig sim;
};

struct ScenarioDoc {
    CenterLine centerline;
    Scene scene;           // Frenet frame
    Eigen::Vector2d goal;  // Frenet frame
    RunConfig config;
};

/// Parse a config override document (the same block shape is accepted inside
/// scenario files). Throws ScenarioError naming the offending field.
void apply_config_json(const std::string& json_text, RunConfig& cfg);

/// Parse and validate a scenario document, converting everything into the
/// Frenet frame of its center-line.
ScenarioDoc load_scenario(const std::string& json_text, const RunConfig& base);

ScenarioDoc load_scenario_file(const std::string& path, const RunConfig& base);

std::string read_text_file(const std::string& path);

}  // namespace fplan
