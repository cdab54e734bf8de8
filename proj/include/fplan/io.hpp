#pragma once

#include <string>

#include "fplan/sim.hpp"

namespace fplan {

/// Write via a temp file plus rename so partial runs never leave a corrupt
/// artifact behind.
void atomic_write_text(const std::string& path, const std::string& content);

std::string traj_csv(const BasisSet& basis, const TrajCoeffs& xi);

std::string simlog_csv(const SimLog& log);

/// Top-down Frenet-frame picture: lane bounds, obstacle footprints, the
/// executed (or planned) path and the goal circle.
std::string scene_svg(const Scene& scene, const Eigen::Vector2d& goal,
                      double goal_radius, const std::vector<Eigen::Vector2d>& path);

}  // namespace fplan
