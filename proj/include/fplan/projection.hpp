#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fplan/basis.hpp"
#include "fplan/scene.hpp"

namespace fplan {

/// Constraint matrices for the feasibility projection. F stacks the polar
/// equality block (obstacles, velocity, acceleration, per axis) on top of the
/// lane inequality block G. Immutable once assembled; shared across batch
/// members and AM iterations.
struct StackedConstraints {
    std::vector<int> selected;  // scene obstacle indices in the stack
    int n_obs = 0;              // number of stacked obstacles
    int m = 0;                  // grid samples
    int n = 0;                  // coefficients per axis
    Eigen::MatrixXd Fo;         // (n_obs*m) x n, W stacked per obstacle
    Eigen::MatrixXd Ft;         // 2*(n_obs*m + 2m) x 2n block diagonal
    Eigen::MatrixXd G;          // 2m x 2n lane rows
    Eigen::VectorXd y_lane;     // [y_ub...; -y_lb...]
    Eigen::MatrixXd F;          // [Ft; G]
    Eigen::VectorXd xo, yo;     // stacked obstacle positions, length n_obs*m

    int rows_axis() const { return n_obs * m + 2 * m; }  // per-axis rows of Ft
    int rows_total() const { return 2 * rows_axis() + 2 * m; }
};

struct ProjectionParams {
    double rho = 1.0;
    int max_iters = 100;
    double tol = 1e-3;
    double d_big = 1e6;
};

/// Iterate bundle of the alternating-minimization loop.
struct ProjectionState {
    Eigen::VectorXd alpha_o, d_o;  // per obstacle sample, length n_obs*m
    Eigen::VectorXd alpha_v, d_v;  // per grid sample, length m
    Eigen::VectorXd alpha_a, d_a;  // per grid sample, length m
    Eigen::VectorXd lambda;        // coefficient space, length 2n
    Eigen::VectorXd s;             // lane slack, length 2m, >= 0
    Eigen::VectorXd e;             // stacked RHS, length rows_total
    std::vector<double> residual_history;
};

/// Factorization of [[I + rho F'F, A'], [A, 0]], reused across iterations
/// and batch members.
struct KktFactor {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    double rho = 0.0;
    int nx = 0;   // primal size (2n)
    int neq = 0;  // equality rows
};

struct Violations {
    double collision = 0.0;  // shortfall of normalized ellipse distance below 1
    double speed = 0.0;      // excess over v_max [m/s]
    double accel = 0.0;      // excess over a_max [m/s^2]
    double lane = 0.0;       // excess outside [y_lb, y_ub] [m]

    double max() const { return std::max(std::max(collision, speed), std::max(accel, lane)); }
};

struct ProjectionResult {
    TrajCoeffs xi_proj;
    bool converged = false;
    int iters = 0;
    double final_residual = 0.0;
    double max_eq_residual = 0.0;  // max over iterates of ||A xi - b||_inf
    Violations max_violation;
    std::vector<double> residual_history;
};

StackedConstraints stack_constraints(const Scene& scene, const BasisSet& basis);

KktFactor build_kkt_factor(const StackedConstraints& sc, const Eigen::MatrixXd& A,
                           double rho);

ProjectionState init_state(const TrajCoeffs& xi0, const Scene& scene,
                           const StackedConstraints& sc, const BasisSet& basis,
                           const ProjectionParams& params);

/// Closed-form polar updates for all three constraint families.
void update_alpha_d(const TrajSamples& samples, const Scene& scene,
                    const StackedConstraints& sc, const ProjectionParams& params,
                    ProjectionState& st);

/// s = max(0, y_lane - G xi), the optimal nonnegative slack.
void update_slack(const TrajCoeffs& xi, const StackedConstraints& sc,
                  ProjectionState& st);

/// lambda += rho * F' * (F xi - e), using the state's current e.
void update_lambda(const TrajCoeffs& xi, const StackedConstraints& sc,
                   const ProjectionParams& params, ProjectionState& st);

/// e = [e_tilde(alpha, d); y_lane - s].
void assemble_e(const Scene& scene, const StackedConstraints& sc, ProjectionState& st);

/// Minimizes 1/2||xi - xi_star||^2 + lambda'xi + rho/2||F xi - e||^2 subject
/// to A xi = b through one factorized KKT solve.
TrajCoeffs qp_step(const TrajCoeffs& xi_star, const StackedConstraints& sc,
                   const ProjectionState& st, const KktFactor& kkt,
                   const Eigen::VectorXd& b);

/// Per-family worst-case constraint violations of xi on the grid.
Violations evaluate_violations(const TrajCoeffs& xi, const Scene& scene,
                               const BasisSet& basis);

ProjectionResult project(const TrajCoeffs& xi0, const Scene& scene,
                         const BasisSet& basis, const ProjectionParams& params);

/// Projection with caller-supplied equality rows (terminal / partial
/// conditioning carried over from the setpoint stage).
ProjectionResult project(const TrajCoeffs& xi0, const Scene& scene,
                         const BasisSet& basis, const ProjectionParams& params,
                         const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

/// Batch projection sharing one constraint stack and one KKT factorization.
std::vector<ProjectionResult> project_batch(const std::vector<TrajCoeffs>& xis,
                                            const Scene& scene, const BasisSet& basis,
                                            const ProjectionParams& params);

}  // namespace fplan
