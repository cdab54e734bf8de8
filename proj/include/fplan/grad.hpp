#pragma once

#include <Eigen/Dense>

#include "fplan/projection.hpp"
#include "fplan/setpoint_qp.hpp"

namespace fplan {

struct GradParams {
    int unroll_iters = 50;
    double kink_eps = 1e-6;  // distance to a clip/hinge corner that flags non-smoothness
};

struct LossWeights {
    double w_goal = 1.0;
    double w_planner = 1.0;
};

/// Exact derivative of the unrolled solve -> project pipeline with respect to
/// the behavioral inputs. Columns follow the input layout: (v_d, y_d) for
/// d_xi_d_p, terminal values for d_xi_d_term, pinned coefficients for
/// d_xi_d_partial. `kink` marks evaluations near a clip or hinge corner.
struct PipelineJacobian {
    Eigen::MatrixXd d_xi_d_p;
    Eigen::MatrixXd d_xi_d_term;
    Eigen::MatrixXd d_xi_d_partial;
    int unroll_iters = 0;
    bool kink = false;
};

struct LossReport {
    double goal_loss = 0.0;
    double planner_loss = 0.0;
    Eigen::Vector2d grad_p = Eigen::Vector2d::Zero();
    Eigen::VectorXd grad_term;
    Eigen::VectorXd grad_partial;
    bool kink = false;
};

struct PipelineEval {
    TrajCoeffs xi_star;  // setpoint QP solution
    TrajCoeffs xi_proj;  // after the fixed number of AM sweeps
};

/// Primal pipeline with a fixed sweep count and no early stopping; this is
/// the function the unrolled Jacobian differentiates.
PipelineEval run_pipeline_fixed(const BehavioralInput& p, const Scene& scene,
                                const BasisSet& basis, const SetpointWeights& w,
                                const ProjectionParams& params, int iters);

double goal_loss(const TrajCoeffs& xi, const BasisSet& basis,
                 const Eigen::Vector2d& goal);

Eigen::VectorXd goal_loss_grad_xi(const TrajCoeffs& xi, const BasisSet& basis,
                                  const Eigen::Vector2d& goal);

/// L2 norm of the stacked hinge violations (collision in ellipse form,
/// speed, acceleration, lane) on the grid.
double planner_loss(const TrajCoeffs& xi, const Scene& scene, const BasisSet& basis);

Eigen::VectorXd planner_loss_grad_xi(const TrajCoeffs& xi, const Scene& scene,
                                     const BasisSet& basis);

PipelineJacobian pipeline_jacobian(const BehavioralInput& p, const Scene& scene,
                                   const BasisSet& basis, const SetpointWeights& w,
                                   const ProjectionParams& params,
                                   const GradParams& gp);

/// Gradients of w_goal * goal_loss + w_planner * planner_loss with respect to
/// the behavioral inputs, chained through the unrolled pipeline.
LossReport loss_gradients(const BehavioralInput& p, const Scene& scene,
                          const BasisSet& basis, const Eigen::Vector2d& goal,
                          const SetpointWeights& w, const ProjectionParams& params,
                          const GradParams& gp, const LossWeights& lw = {});

}  // namespace fplan
