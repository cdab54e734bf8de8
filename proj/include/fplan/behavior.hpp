#pragma once

#include <cstdint>
#include <vector>

#include "fplan/grad.hpp"
#include "fplan/projection.hpp"

namespace fplan {

struct BehaviorDistribution {
    double v_mean = 5.0, v_std = 1.0;  // forward speed setpoint [m/s]
    double y_mean = 0.0, y_std = 0.5;  // lateral offset setpoint [m]
    int num_samples = 16;
};

struct RefinementConfig {
    int steps = 30;
    double lr = 0.05;
    LossWeights loss_weights;
    int unroll_iters = 50;  // AM sweeps differentiated per gradient step
};

/// One fully evaluated candidate: refined input, converged projection and the
/// two losses of the projected trajectory.
struct CandidateOutcome {
    BehavioralInput input;
    ProjectionResult result;
    double goal = 0.0;
    double planner = 0.0;

    double combined(const LossWeights& lw) const {
        return lw.w_goal * goal + lw.w_planner * planner;
    }
};

/// Gaussian setpoint samples clipped to the scene's speed and lane bounds.
/// Deterministic for a fixed seed.
std::vector<BehavioralInput> sample_behaviors(const BehaviorDistribution& dist,
                                              const Scene& scene, std::uint64_t seed);

/// Per-member gradient descent on the combined loss with a halving line
/// search; a member never leaves with a worse loss than it entered.
std::vector<BehavioralInput> refine_behaviors(const std::vector<BehavioralInput>& batch,
                                              const Scene& scene, const BasisSet& basis,
                                              const Eigen::Vector2d& goal,
                                              const SetpointWeights& w,
                                              const ProjectionParams& params,
                                              const RefinementConfig& cfg);

/// Solve + converged projection + losses for each member, sharing the
/// setpoint and projection factorizations. Members must not carry terminal or
/// partial conditioning (the shared equality block assumes boundary rows).
std::vector<CandidateOutcome> evaluate_candidates(const std::vector<BehavioralInput>& batch,
                                                  const Scene& scene,
                                                  const BasisSet& basis,
                                                  const Eigen::Vector2d& goal,
                                                  const SetpointWeights& w,
                                                  const ProjectionParams& params);

/// Argmin of the combined loss; ties broken by lower planner loss, then by
/// lower index. Throws EmptyBatch on an empty list.
int select_best(const std::vector<CandidateOutcome>& outcomes, const LossWeights& lw);

}  // namespace fplan
