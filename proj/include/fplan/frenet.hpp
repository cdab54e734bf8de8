#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fplan/errors.hpp"

namespace fplan {

/// Piecewise-linear lane center-line with a cumulative arc-length table.
/// Immutable after construction; all queries are pure.
struct CenterLine {
    std::vector<Eigen::Vector2d> points;
    std::vector<double> cum_arclen;  // cum_arclen[0] = 0, strictly increasing

    double total_length() const { return cum_arclen.back(); }
};

struct FrenetPose {
    double s = 0.0;            // longitudinal arc length [m]
    double d = 0.0;            // signed lateral offset, positive left [m]
    double heading_rel = 0.0;  // heading relative to tangent [rad]
    double speed = 0.0;        // scalar speed [m/s]
};

CenterLine build_centerline(const std::vector<Eigen::Vector2d>& points);

/// Nearest-point projection onto the polyline. Throws OutOfCorridor when the
/// projection distance exceeds `corridor`.
std::pair<double, double> to_frenet(const CenterLine& cl, const Eigen::Vector2d& xy,
                                    double corridor = 20.0);

/// center(s) + d * left-normal(s). Throws OutOfRange for s outside [0, total].
Eigen::Vector2d to_global(const CenterLine& cl, double s, double d);

/// Unit tangent of the segment containing s.
Eigen::Vector2d tangent_at(const CenterLine& cl, double s);

}  // namespace fplan
