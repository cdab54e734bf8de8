#pragma once

#include <Eigen/Dense>

#include "fplan/errors.hpp"

namespace fplan {

/// Bernstein basis of a given degree sampled on a uniform time grid over
/// [0, horizon]. W holds basis values, Wd/Wdd/Wddd the analytic first,
/// second and third time-derivatives. Rows index grid instants, columns
/// index basis functions. Immutable after construction.
struct BasisSet {
    int degree = 0;
    double horizon = 0.0;
    int m = 0;
    double dt = 0.0;
    Eigen::VectorXd times;  // length m
    Eigen::MatrixXd W, Wd, Wdd, Wddd;

    int n_coef() const { return degree + 1; }
};

/// One polynomial trajectory: per-axis coefficient vectors, stacked as
/// (cx, cy) when a single decision vector is needed.
struct TrajCoeffs {
    Eigen::VectorXd cx, cy;

    Eigen::VectorXd stacked() const;
    static TrajCoeffs from_stacked(const Eigen::VectorXd& xi);
};

struct TrajSamples {
    Eigen::VectorXd x, y, xd, yd, xdd, ydd;
};

/// Position/velocity/acceleration at one time instant.
struct TrajPoint {
    Eigen::Vector2d pos, vel, acc;
};

BasisSet make_basis(int degree, double horizon, int m);

TrajSamples eval_traj(const BasisSet& basis, const TrajCoeffs& xi);

/// Basis rows at an arbitrary time t in [0, horizon].
void basis_rows_at(const BasisSet& basis, double t, Eigen::RowVectorXd& w,
                   Eigen::RowVectorXd& wd, Eigen::RowVectorXd& wdd);

TrajPoint eval_point(const BasisSet& basis, const TrajCoeffs& xi, double t);

}  // namespace fplan
