#pragma once

#include <cstdint>
#include <vector>

#include "fplan/behavior.hpp"

namespace fplan {

struct SimConfig {
    double replan_dt = 0.5;
    double sim_dt = 0.1;
    double max_time = 30.0;
    double success_radius = 3.0;  // goal-reaching radius [m]
};

/// Knobs of the planning stack. Margins tighten the planning limits so
/// executed motion stays inside the nominal ones despite the projection's
/// convergence slack.
struct PlannerConfig {
    SetpointWeights weights;
    ProjectionParams proj;
    RefinementConfig refine;
    int num_samples = 16;
    double v_std = 1.0;
    double y_std = 0.5;
    double ellipse_margin = 0.25;
    double v_margin = 0.2;
    double a_margin = 0.2;
};

/// Lighter refinement settings for replanning loops, where refinement reruns
/// every cycle and warm goals make long descent runs unnecessary.
PlannerConfig closed_loop_defaults();

struct SimStep {
    double t = 0.0;
    double x = 0.0, y = 0.0;
    double vx = 0.0, vy = 0.0;
    double ax = 0.0, ay = 0.0;
    Violations viol;  // instantaneous, against the nominal limits
};

struct PlanRecord {
    double t = 0.0;
    TrajCoeffs xi;
    double endpoint_dist = 0.0;  // plan endpoint to goal [m]
    bool feasible = false;
    int iters = 0;
    double residual = 0.0;
    double goal_loss = 0.0;
    double planner_loss = 0.0;
};

struct SimLog {
    std::vector<SimStep> steps;
    std::vector<PlanRecord> plans;
    bool reached = false;
    bool collision = false;
    double end_time = 0.0;
};

struct Metrics {
    double min_fde = 0.0;     // min over replans of endpoint-to-goal distance [m]
    double smoothness = 0.0;  // mean executed acceleration magnitude [m/s^2]
    bool success = false;
    bool collision = false;
    double time_to_goal = 0.0;
};

struct ScenarioCase {
    Scene scene;
    Eigen::Vector2d goal;
};

SimLog run_closed_loop(const Scene& scene, const Eigen::Vector2d& goal,
                       const PlannerConfig& planner, const SimConfig& sim,
                       const BasisSet& basis, std::uint64_t seed);

/// Advance every obstacle by velocity * dt and regenerate its grid prediction.
Scene propagate_obstacles(const Scene& scene, double dt, const BasisSet& basis);

Metrics compute_metrics(const SimLog& log, const Eigen::Vector2d& goal,
                        const SimConfig& sim);

/// Randomized straight-road scenarios, each certified reachable by a coarse
/// (v_d, y_d) grid search before inclusion.
std::vector<ScenarioCase> generate_corpus(int n, std::uint64_t seed,
                                          const BasisSet& basis,
                                          const PlannerConfig& planner = {});

/// Deterministic seed stream for per-replan sampling.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace fplan
