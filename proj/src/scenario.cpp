#include "fplan/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fplan {

namespace {

using nlohmann::json;

double get_num(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.contains(key)) throw ScenarioError("missing field " + path + key);
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ScenarioError("field " + path + key + " must be a number");
    return v.get<double>();
}

double get_num_or(const json& obj, const std::string& path, const std::string& key,
                  double fallback) {
    if (!obj.contains(key)) return fallback;
    return get_num(obj, path, key);
}

void merge_config(const json& doc, RunConfig& cfg) {
    if (doc.contains("basis")) {
        const auto& b = doc.at("basis");
        cfg.basis.degree = static_cast<int>(get_num_or(b, "basis.", "degree", cfg.basis.degree));
        cfg.basis.horizon = get_num_or(b, "basis.", "horizon", cfg.basis.horizon);
        cfg.basis.samples = static_cast<int>(get_num_or(b, "basis.", "m", cfg.basis.samples));
    }
    if (doc.contains("planner")) {
        const auto& p = doc.at("planner");
        if (p.contains("weights")) {
            const auto& w = p.at("weights");
            auto& sw = cfg.planner.weights;
            sw.w_s = get_num_or(w, "planner.weights.", "w_s", sw.w_s);
            sw.w_l = get_num_or(w, "planner.weights.", "w_l", sw.w_l);
            sw.w_v = get_num_or(w, "planner.weights.", "w_v", sw.w_v);
            sw.w_jerk = get_num_or(w, "planner.weights.", "w_jerk", sw.w_jerk);
            sw.kappa_p = get_num_or(w, "planner.weights.", "kappa_p", sw.kappa_p);
            sw.kappa_v = get_num_or(w, "planner.weights.", "kappa_v", sw.kappa_v);
        }
        if (p.contains("projection")) {
            const auto& r = p.at("projection");
            auto& pr = cfg.planner.proj;
            pr.rho = get_num_or(r, "planner.projection.", "rho", pr.rho);
            pr.max_iters = static_cast<int>(
                get_num_or(r, "planner.projection.", "max_iters", pr.max_iters));
            pr.tol = get_num_or(r, "planner.projection.", "tol", pr.tol);
            pr.d_big = get_num_or(r, "planner.projection.", "d_big", pr.d_big);
        }
        if (p.contains("refine")) {
            const auto& r = p.at("refine");
            auto& rf = cfg.planner.refine;
            rf.steps = static_cast<int>(get_num_or(r, "planner.refine.", "steps", rf.steps));
            rf.lr = get_num_or(r, "planner.refine.", "lr", rf.lr);
            rf.unroll_iters = static_cast<int>(
                get_num_or(r, "planner.refine.", "unroll_iters", rf.unroll_iters));
            rf.loss_weights.w_goal =
                get_num_or(r, "planner.refine.", "w_goal", rf.loss_weights.w_goal);
            rf.loss_weights.w_planner =
                get_num_or(r, "planner.refine.", "w_planner", rf.loss_weights.w_planner);
        }
        if (p.contains("samples")) {
            const auto& s = p.at("samples");
            cfg.planner.num_samples = static_cast<int>(
                get_num_or(s, "planner.samples.", "count", cfg.planner.num_samples));
            cfg.planner.v_std = get_num_or(s, "planner.samples.", "v_std", cfg.planner.v_std);
            cfg.planner.y_std = get_num_or(s, "planner.samples.", "y_std", cfg.planner.y_std);
        }
        if (p.contains("margins")) {
            const auto& m = p.at("margins");
            cfg.planner.ellipse_margin =
                get_num_or(m, "planner.margins.", "ellipse", cfg.planner.ellipse_margin);
            cfg.planner.v_margin = get_num_or(m, "planner.margins.", "v", cfg.planner.v_margin);
            cfg.planner.a_margin = get_num_or(m, "planner.margins.", "a", cfg.planner.a_margin);
        }
    }
    if (doc.contains("sim")) {
        const auto& s = doc.at("sim");
        cfg.sim.replan_dt = get_num_or(s, "sim.", "replan_dt", cfg.sim.replan_dt);
        cfg.sim.sim_dt = get_num_or(s, "sim.", "sim_dt", cfg.sim.sim_dt);
        cfg.sim.max_time = get_num_or(s, "sim.", "max_time", cfg.sim.max_time);
        cfg.sim.success_radius =
            get_num_or(s, "sim.", "success_radius", cfg.sim.success_radius);
    }
}

json parse(const std::string& text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw ScenarioError("document is not valid JSON");
    if (!doc.is_object()) throw ScenarioError("top-level JSON value must be an object");
    return doc;
}

}  // namespace

void apply_config_json(const std::string& json_text, RunConfig& cfg) {
    merge_config(parse(json_text), cfg);
}

ScenarioDoc load_scenario(const std::string& json_text, const RunConfig& base) {
    const json doc = parse(json_text);
    ScenarioDoc out;
    out.config = base;
    merge_config(doc, out.config);  // scenario-local overrides win

    if (!doc.contains("centerline")) throw ScenarioError("missing field centerline");
    const auto& cl = doc.at("centerline");
    if (!cl.is_array() || cl.size() < 2) {
        throw ScenarioError("field centerline must be an array of at least 2 [x, y] pairs");
    }
    std::vector<Eigen::Vector2d> pts;
    for (std::size_t i = 0; i < cl.size(); ++i) {
        const auto& p = cl.at(i);
        if (!p.is_array() || p.size() != 2 || !p.at(0).is_number() || !p.at(1).is_number()) {
            throw ScenarioError("centerline[" + std::to_string(i) +
                                "] must be an [x, y] number pair");
        }
        pts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    }
    try {
        out.centerline = build_centerline(pts);
    } catch (const DegenerateCenterLine& e) {
        throw ScenarioError(std::string("field centerline: ") + e.what());
    }

    if (!doc.contains("lane")) throw ScenarioError("missing field lane");
    out.scene.y_lb = get_num(doc.at("lane"), "lane.", "y_lb");
    out.scene.y_ub = get_num(doc.at("lane"), "lane.", "y_ub");

    if (!doc.contains("limits")) throw ScenarioError("missing field limits");
    const auto& lim = doc.at("limits");
    out.scene.v_max = get_num(lim, "limits.", "v_max");
    out.scene.v_min = get_num_or(lim, "limits.", "v_min", 0.01);
    out.scene.a_max = get_num(lim, "limits.", "a_max");
    out.scene.ell_a = get_num(lim, "limits.", "ell_a");
    out.scene.ell_b = get_num(lim, "limits.", "ell_b");

    const BasisSet basis = make_basis(out.config.basis.degree, out.config.basis.horizon,
                                      out.config.basis.samples);

    if (!doc.contains("ego")) throw ScenarioError("missing field ego");
    const auto& ego = doc.at("ego");
    const Eigen::Vector2d ego_xy{get_num(ego, "ego.", "x"), get_num(ego, "ego.", "y")};
    const double heading = get_num(ego, "ego.", "heading");
    const double speed = get_num(ego, "ego.", "speed");
    double s0, d0;
    try {
        std::tie(s0, d0) = to_frenet(out.centerline, ego_xy);
    } catch (const OutOfCorridor& e) {
        throw ScenarioError(std::string("field ego: ") + e.what());
    }
    const Eigen::Vector2d tang = tangent_at(out.centerline, s0);
    const double theta = std::atan2(tang.y(), tang.x());
    const double rel = heading - theta;
    out.scene.ego0.pos = {s0, d0};
    out.scene.ego0.vel = {speed * std::cos(rel), speed * std::sin(rel)};
    out.scene.ego0.acc = {0.0, 0.0};

    if (doc.contains("obstacles")) {
        const auto& obs = doc.at("obstacles");
        if (!obs.is_array()) throw ScenarioError("field obstacles must be an array");
        for (std::size_t i = 0; i < obs.size(); ++i) {
            const std::string path = "obstacles[" + std::to_string(i) + "].";
            const auto& o = obs.at(i);
            const double ox = get_num(o, path, "x");
            const double oy = get_num(o, path, "y");
            const double ovx = get_num(o, path, "vx");
            const double ovy = get_num(o, path, "vy");
            ObstacleTrack track;
            // Sample the global constant-velocity rollout through the
            // center-line mapping, one instant at a time.
            track.xs.resize(basis.m);
            track.ys.resize(basis.m);
            for (int k = 0; k < basis.m; ++k) {
                const Eigen::Vector2d g{ox + ovx * basis.times(k), oy + ovy * basis.times(k)};
                double os, od;
                try {
                    std::tie(os, od) = to_frenet(out.centerline, g);
                } catch (const OutOfCorridor& e) {
                    throw ScenarioError("field obstacles[" + std::to_string(i) + "]: " +
                                        e.what());
                }
                track.xs(k) = os;
                track.ys(k) = od;
            }
            track.x = track.xs(0);
            track.y = track.ys(0);
            const Eigen::Vector2d ot = tangent_at(out.centerline, track.x);
            track.vx = ovx * ot.x() + ovy * ot.y();
            track.vy = -ovx * ot.y() + ovy * ot.x();
            out.scene.obstacles.push_back(std::move(track));
        }
    }

    if (!doc.contains("goal")) throw ScenarioError("missing field goal");
    const Eigen::Vector2d goal_xy{get_num(doc.at("goal"), "goal.", "x"),
                                  get_num(doc.at("goal"), "goal.", "y")};
    try {
        const auto [gs, gd] = to_frenet(out.centerline, goal_xy);
        out.goal = {gs, gd};
    } catch (const OutOfCorridor& e) {
        throw ScenarioError(std::string("field goal: ") + e.what());
    }

    try {
        out.scene.validate();
    } catch (const std::exception& e) {
        throw ScenarioError(std::string("invalid limits/lane: ") + e.what());
    }
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError("cannot open file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ScenarioDoc load_scenario_file(const std::string& path, const RunConfig& base) {
    return load_scenario(read_text_file(path), base);
}

}  // namespace fplan
