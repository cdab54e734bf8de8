#include "fplan/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fplan {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace

void atomic_write_text(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string());
        out << content;
    }
    fs::rename(tmp, target);
}

std::string traj_csv(const BasisSet& basis, const TrajCoeffs& xi) {
    const TrajSamples s = eval_traj(basis, xi);
    std::ostringstream out;
    out << "t,x,y,xd,yd,xdd,ydd\n";
    for (int k = 0; k < basis.m; ++k) {
        out << num(basis.times(k)) << ',' << num(s.x(k)) << ',' << num(s.y(k)) << ','
            << num(s.xd(k)) << ',' << num(s.yd(k)) << ',' << num(s.xdd(k)) << ','
            << num(s.ydd(k)) << '\n';
    }
    return out.str();
}

std::string simlog_csv(const SimLog& log) {
    std::ostringstream out;
    out << "t,x,y,vx,vy,ax,ay,viol_collision,viol_speed,viol_accel,viol_lane\n";
    for (const auto& st : log.steps) {
        out << num(st.t) << ',' << num(st.x) << ',' << num(st.y) << ',' << num(st.vx)
            << ',' << num(st.vy) << ',' << num(st.ax) << ',' << num(st.ay) << ','
            << num(st.viol.collision) << ',' << num(st.viol.speed) << ','
            << num(st.viol.accel) << ',' << num(st.viol.lane) << '\n';
    }
    return out.str();
}

std::string scene_svg(const Scene& scene, const Eigen::Vector2d& goal,
                      double goal_radius, const std::vector<Eigen::Vector2d>& path) {
    double x_min = -5.0, x_max = goal.x() + 10.0;
    for (const auto& p : path) {
        x_min = std::min(x_min, p.x() - 5.0);
        x_max = std::max(x_max, p.x() + 5.0);
    }
    for (const auto& o : scene.obstacles) x_max = std::max(x_max, o.x + 10.0);
    const double y_span = std::max(4.0, scene.y_ub - scene.y_lb + 4.0);
    const double scale = 10.0;  // px per meter
    const double width = (x_max - x_min) * scale;
    const double height = y_span * 2.0 * scale;
    const double y0 = height / 2.0;

    auto X = [&](double x) { return (x - x_min) * scale; };
    auto Y = [&](double y) { return y0 - y * scale; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width)
        << "\" height=\"" << num(height) << "\" viewBox=\"0 0 " << num(width) << ' '
        << num(height) << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (double yb : {scene.y_lb, scene.y_ub}) {
        out << "<line x1=\"0\" y1=\"" << num(Y(yb)) << "\" x2=\"" << num(width)
            << "\" y2=\"" << num(Y(yb)) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    }
    out << "<line x1=\"0\" y1=\"" << num(Y(0)) << "\" x2=\"" << num(width)
        << "\" y2=\"" << num(Y(0))
        << "\" stroke=\"gray\" stroke-dasharray=\"8 8\"/>\n";
    for (const auto& o : scene.obstacles) {
        out << "<ellipse cx=\"" << num(X(o.x)) << "\" cy=\"" << num(Y(o.y))
            << "\" rx=\"" << num(scene.ell_a * scale) << "\" ry=\""
            << num(scene.ell_b * scale)
            << "\" fill=\"steelblue\" fill-opacity=\"0.35\" stroke=\"steelblue\"/>\n";
        out << "<line x1=\"" << num(X(o.x)) << "\" y1=\"" << num(Y(o.y)) << "\" x2=\""
            << num(X(o.x + o.vx)) << "\" y2=\"" << num(Y(o.y + o.vy))
            << "\" stroke=\"steelblue\" stroke-width=\"2\"/>\n";
    }
    out << "<circle cx=\"" << num(X(goal.x())) << "\" cy=\"" << num(Y(goal.y()))
        << "\" r=\"" << num(goal_radius * scale)
        << "\" fill=\"none\" stroke=\"green\" stroke-width=\"2\"/>\n";
    out << "<circle cx=\"" << num(X(goal.x())) << "\" cy=\"" << num(Y(goal.y()))
        << "\" r=\"3\" fill=\"green\"/>\n";
    if (!path.empty()) {
        out << "<polyline fill=\"none\" stroke=\"crimson\" stroke-width=\"2\" points=\"";
        for (const auto& p : path) out << num(X(p.x())) << ',' << num(Y(p.y())) << ' ';
        out << "\"/>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace fplan
