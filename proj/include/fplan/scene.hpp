#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fplan/basis.hpp"
#include "fplan/setpoint_qp.hpp"

namespace fplan {

/// One neighbouring vehicle: current Frenet state plus its predicted
/// positions sampled on the planning grid.
struct ObstacleTrack {
    double x = 0.0, y = 0.0;    // current position [m]
    double vx = 0.0, vy = 0.0;  // velocity [m/s]
    Eigen::VectorXd xs, ys;     // predicted positions on the grid

    /// Constant-velocity rollout onto the basis grid.
    void predict(const BasisSet& basis);
};

/// Planning scene in the Frenet frame: ego start, obstacle predictions,
/// lane bounds, kinematic limits and the combined footprint ellipse.
struct Scene {
    EgoBoundary ego0;
    std::vector<ObstacleTrack> obstacles;
    double y_lb = -1.75, y_ub = 1.75;  // lane bounds [m]
    double v_min = 0.01, v_max = 10.0; // speed bounds [m/s]
    double a_max = 4.0;                // acceleration bound [m/s^2]
    double ell_a = 3.5, ell_b = 1.2;   // combined ellipse semi-axes [m]

    void validate() const;

    /// Copy with limits tightened by the given margins; used so executed
    /// trajectories stay inside the nominal limits despite solver slack.
    Scene with_margins(double ellipse_margin, double v_margin, double a_margin) const;
};

ObstacleTrack make_obstacle(double x, double y, double vx, double vy,
                            const BasisSet& basis);

/// Indices of the nearest obstacles to the ego start, closest first,
/// capped at max_count and at the given range.
std::vector<int> select_obstacles(const Scene& scene, int max_count = 5,
                                  double range = 50.0);

}  // namespace fplan
