#include "fplan/frenet.hpp"

#include <cmath>
#include <limits>

namespace fplan {

CenterLine build_centerline(const std::vector<Eigen::Vector2d>& points) {
    // Drop consecutive duplicates so segment tangents are well defined.
    std::vector<Eigen::Vector2d> pts;
    pts.reserve(points.size());
    for (const auto& p : points) {
        if (pts.empty() || (p - pts.back()).norm() > 1e-12) pts.push_back(p);
    }
    if (pts.size() < 2) {
        throw DegenerateCenterLine("center-line needs at least 2 distinct points");
    }
    CenterLine cl;
    cl.points = std::move(pts);
    cl.cum_arclen.resize(cl.points.size());
    cl.cum_arclen[0] = 0.0;
    for (std::size_t i = 1; i < cl.points.size(); ++i) {
        cl.cum_arclen[i] = cl.cum_arclen[i - 1] + (cl.points[i] - cl.points[i - 1]).norm();
    }
    return cl;
}

namespace {

// Index of the segment containing arc length s (clamped to valid range).
std::size_t segment_index(const CenterLine& cl, double s) {
    const auto& acc = cl.cum_arclen;
    std::size_t lo = 0, hi = acc.size() - 1;
    while (hi - lo > 1) {
        std::size_t mid = (lo + hi) / 2;
        if (acc[mid] <= s) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

}  // namespace

std::pair<double, double> to_frenet(const CenterLine& cl, const Eigen::Vector2d& xy,
                                    double corridor) {
    double best_dist2 = std::numeric_limits<double>::infinity();
    double best_s = 0.0;
    double best_side = 0.0;
    for (std::size_t i = 0; i + 1 < cl.points.size(); ++i) {
        const Eigen::Vector2d a = cl.points[i];
        const Eigen::Vector2d ab = cl.points[i + 1] - a;
        const double len2 = ab.squaredNorm();
        double u = (xy - a).dot(ab) / len2;
        u = std::clamp(u, 0.0, 1.0);
        const Eigen::Vector2d proj = a + u * ab;
        const double dist2 = (xy - proj).squaredNorm();
        if (dist2 < best_dist2) {
            best_dist2 = dist2;
            best_s = cl.cum_arclen[i] + u * std::sqrt(len2);
            // Cross product sign: positive when xy is left of travel direction.
            const Eigen::Vector2d r = xy - proj;
            best_side = ab.x() * r.y() - ab.y() * r.x();
        }
    }
    const double dist = std::sqrt(best_dist2);
    if (dist > corridor) {
        throw OutOfCorridor("point is " + std::to_string(dist) +
                            " m from the center-line (corridor " +
                            std::to_string(corridor) + " m)");
    }
    const double d = (best_side >= 0.0) ? dist : -dist;
    return {best_s, d};
}

Eigen::Vector2d to_global(const CenterLine& cl, double s, double d) {
    const double total = cl.total_length();
    if (s < -1e-9 || s > total + 1e-9) {
        throw OutOfRange("arc length " + std::to_string(s) + " outside [0, " +
                         std::to_string(total) + "]");
    }
    s = std::clamp(s, 0.0, total);
    const std::size_t i = segment_index(cl, s);
    const Eigen::Vector2d a = cl.points[i];
    const Eigen::Vector2d ab = cl.points[i + 1] - a;
    const double seg_len = ab.norm();
    const Eigen::Vector2d t = ab / seg_len;
    const Eigen::Vector2d left(-t.y(), t.x());
    const double u = s - cl.cum_arclen[i];
    return a + u * t + d * left;
}

Eigen::Vector2d tangent_at(const CenterLine& cl, double s) {
    const double total = cl.total_length();
    if (s < -1e-9 || s > total + 1e-9) {
        throw OutOfRange("arc length " + std::to_string(s) + " outside [0, " +
                         std::to_string(total) + "]");
    }
    s = std::clamp(s, 0.0, total);
    const std::size_t i = segment_index(cl, s);
    return (cl.points[i + 1] - cl.points[i]).normalized();
}

}  // namespace fplan
