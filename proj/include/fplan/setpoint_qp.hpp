#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fplan/basis.hpp"

namespace fplan {

/// Cost weights and tracking gains for the setpoint QP. The per-term weights
/// default to 1; w_jerk enables the optional jerk smoothness term (off by
/// default, the acceleration form is the standard one).
struct SetpointWeights {
    double w_s = 1.0;
    double w_l = 1.0;
    double w_v = 1.0;
    double w_jerk = 0.0;
    double kappa_p = 1.0;  // proportional gain [1/s^2]
    double kappa_v = 2.0;  // derivative gain [1/s]
};

/// Terminal position/velocity constraint per axis.
struct TerminalState {
    Eigen::Vector2d pos;
    Eigen::Vector2d vel;
    std::optional<Eigen::Vector2d> acc;  // extra terminal rows when present
};

/// Pins selected entries of the stacked coefficient vector to fixed values
/// through identity equality rows.
struct PartialSolution {
    std::vector<int> indices;  // sorted, unique, in [0, 2*n_coef)
    Eigen::VectorXd values;
};

/// Behavioral input: desired forward speed and lateral offset, with optional
/// terminal-state and partial-solution conditioning.
struct BehavioralInput {
    double v_d = 0.0;
    double y_d = 0.0;
    std::optional<TerminalState> term;
    std::optional<PartialSolution> partial;
};

/// Initial position/velocity/acceleration per axis.
struct EgoBoundary {
    Eigen::Vector2d pos = Eigen::Vector2d::Zero();
    Eigen::Vector2d vel = Eigen::Vector2d::Zero();
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
};

/// Equality-constrained QP in stacked coefficient space:
/// min 1/2 xi'Q xi + q'xi + cost_offset  s.t.  A xi = b.
/// cost_offset makes the quadratic form equal the discrete tracking cost.
struct QpProblem {
    Eigen::MatrixXd Q;
    Eigen::VectorXd q;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    double cost_offset = 0.0;
};

struct QpSolution {
    TrajCoeffs xi;
    Eigen::VectorXd nu;  // equality multipliers
};

/// Initial-condition rows alone (r = 0, 1, 2 per axis).
void boundary_rows(const BasisSet& basis, const EgoBoundary& b0, Eigen::MatrixXd& A,
                   Eigen::VectorXd& b);

/// Full equality block: initial conditions plus terminal rows and identity
/// rows for the partial solution when present in p.
void equality_rows(const BasisSet& basis, const BehavioralInput& p,
                   const EgoBoundary& b0, Eigen::MatrixXd& A, Eigen::VectorXd& b);

QpProblem build_qp(const BasisSet& basis, const SetpointWeights& w,
                   const BehavioralInput& p, const EgoBoundary& b0);

/// One dense KKT factorization: [[Q, A'], [A, 0]] [xi; nu] = [-q; b].
QpSolution solve_eq_qp(const QpProblem& qp);

/// Discrete tracking cost evaluated directly from trajectory samples.
double setpoint_objective(const BasisSet& basis, const SetpointWeights& w,
                          const BehavioralInput& p, const TrajCoeffs& xi);

/// Quadratic-form value 1/2 xi'Q xi + q'xi + cost_offset.
double qp_objective(const QpProblem& qp, const TrajCoeffs& xi);

}  // namespace fplan
