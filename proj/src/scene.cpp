#include "fplan/scene.hpp"

#include <algorithm>
#include <cmath>

namespace fplan {

void ObstacleTrack::predict(const BasisSet& basis) {
    xs = Eigen::VectorXd::Constant(basis.m, x) + vx * basis.times;
    ys = Eigen::VectorXd::Constant(basis.m, y) + vy * basis.times;
}

void Scene::validate() const {
    if (!(y_lb < y_ub)) throw DimensionMismatch("lane bounds require y_lb < y_ub");
    if (!(0.0 <= v_min && v_min < v_max)) {
        throw DimensionMismatch("speed bounds require 0 <= v_min < v_max");
    }
    if (!(a_max > 0.0)) throw DimensionMismatch("a_max must be positive");
    if (!(ell_a > 0.0 && ell_b > 0.0)) {
        throw DimensionMismatch("ellipse axes must be positive");
    }
}

Scene Scene::with_margins(double ellipse_margin, double v_margin,
                          double a_margin) const {
    Scene s = *this;
    s.ell_a += ellipse_margin;
    s.ell_b += ellipse_margin;
    s.v_max = std::max(s.v_min + 0.1, s.v_max - v_margin);
    s.a_max = std::max(0.1, s.a_max - a_margin);
    return s;
}

ObstacleTrack make_obstacle(double x, double y, double vx, double vy,
                            const BasisSet& basis) {
    ObstacleTrack o;
    o.x = x;
    o.y = y;
    o.vx = vx;
    o.vy = vy;
    o.predict(basis);
    return o;
}

std::vector<int> select_obstacles(const Scene& scene, int max_count, double range) {
    std::vector<std::pair<double, int>> by_dist;
    for (int i = 0; i < static_cast<int>(scene.obstacles.size()); ++i) {
        const auto& o = scene.obstacles[i];
        const double dx = o.x - scene.ego0.pos.x();
        const double dy = o.y - scene.ego0.pos.y();
        const double dist = std::hypot(dx, dy);
        if (dist <= range) by_dist.emplace_back(dist, i);
    }
    std::sort(by_dist.begin(), by_dist.end());
    std::vector<int> out;
    for (const auto& [dist, idx] : by_dist) {
        if (static_cast<int>(out.size()) >= max_count) break;
        out.push_back(idx);
    }
    return out;
}

}  // namespace fplan
