#include "fplan/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fplan {

PlannerConfig closed_loop_defaults() {
    PlannerConfig p;
    p.refine.steps = 4;
    p.refine.lr = 0.2;
    p.refine.unroll_iters = 12;
    p.num_samples = 8;
    return p;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    // splitmix64 finalizer over the combined word
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Scene propagate_obstacles(const Scene& scene, double dt, const BasisSet& basis) {
    Scene out = scene;
    for (auto& o : out.obstacles) {
        o.x += o.vx * dt;
        o.y += o.vy * dt;
        o.predict(basis);
    }
    return out;
}

namespace {

// Instantaneous violations of one executed state against the nominal scene,
// with obstacles advanced by `dt` from their stored positions.
Violations point_violations(const Scene& scene, double dt, const Eigen::Vector2d& pos,
                            const Eigen::Vector2d& vel, const Eigen::Vector2d& acc) {
    Violations v;
    for (const auto& o : scene.obstacles) {
        const double ox = o.x + o.vx * dt;
        const double oy = o.y + o.vy * dt;
        const double dn = std::hypot((pos.x() - ox) / scene.ell_a,
                                     (pos.y() - oy) / scene.ell_b);
        v.collision = std::max(v.collision, 1.0 - dn);
    }
    v.collision = std::max(0.0, v.collision);
    v.speed = std::max(0.0, vel.norm() - scene.v_max);
    v.accel = std::max(0.0, acc.norm() - scene.a_max);
    v.lane = std::max({0.0, pos.y() - scene.y_ub, scene.y_lb - pos.y()});
    return v;
}

}  // namespace

SimLog run_closed_loop(const Scene& scene, const Eigen::Vector2d& goal,
                       const PlannerConfig& planner, const SimConfig& sim,
                       const BasisSet& basis, std::uint64_t seed) {
    SimLog log;
    Scene cur = scene;  // nominal scene, obstacles advanced each replan
    cur.validate();

    EgoBoundary ego = scene.ego0;
    double t = 0.0;

    {
        SimStep st;
        st.t = 0.0;
        st.x = ego.pos.x();
        st.y = ego.pos.y();
        st.vx = ego.vel.x();
        st.vy = ego.vel.y();
        st.ax = ego.acc.x();
        st.ay = ego.acc.y();
        st.viol = point_violations(cur, 0.0, ego.pos, ego.vel, ego.acc);
        log.steps.push_back(st);
        if (st.viol.collision > 0.0) log.collision = true;
        if ((ego.pos - goal).norm() <= sim.success_radius) log.reached = true;
    }

    const int nsub = std::max(1, static_cast<int>(std::lround(sim.replan_dt / sim.sim_dt)));
    std::uint64_t replan_idx = 0;

    while (!log.reached && !log.collision && t < sim.max_time - 1e-9) {
        Scene plan_scene = cur.with_margins(planner.ellipse_margin, planner.v_margin,
                                            planner.a_margin);
        plan_scene.ego0 = ego;

        const double dist = (goal - ego.pos).norm();
        BehaviorDistribution dist_cfg;
        dist_cfg.v_mean = std::clamp(1.5 * dist / basis.horizon, plan_scene.v_min + 0.1,
                                     plan_scene.v_max);
        dist_cfg.v_std = planner.v_std;
        dist_cfg.y_mean = std::clamp(goal.y(), plan_scene.y_lb, plan_scene.y_ub);
        dist_cfg.y_std = planner.y_std;
        dist_cfg.num_samples = planner.num_samples;

        auto batch = sample_behaviors(dist_cfg, plan_scene, mix_seed(seed, replan_idx));
        batch = refine_behaviors(batch, plan_scene, basis, goal, planner.weights,
                                 planner.proj, planner.refine);
        const auto outcomes = evaluate_candidates(batch, plan_scene, basis, goal,
                                                  planner.weights, planner.proj);
        const int best = select_best(outcomes, planner.refine.loss_weights);
        const auto& chosen = outcomes[best];

        PlanRecord rec;
        rec.t = t;
        rec.xi = chosen.result.xi_proj;
        rec.endpoint_dist = std::sqrt(chosen.goal);
        rec.feasible = chosen.result.max_violation.max() <= 1e-2;
        rec.iters = chosen.result.iters;
        rec.residual = chosen.result.final_residual;
        rec.goal_loss = chosen.goal;
        rec.planner_loss = chosen.planner;
        log.plans.push_back(rec);

        for (int i = 1; i <= nsub; ++i) {
            const double tau = i * sim.sim_dt;
            const TrajPoint pt = eval_point(basis, rec.xi, tau);
            SimStep st;
            st.t = t + tau;
            st.x = pt.pos.x();
            st.y = pt.pos.y();
            st.vx = pt.vel.x();
            st.vy = pt.vel.y();
            st.ax = pt.acc.x();
            st.ay = pt.acc.y();
            st.viol = point_violations(cur, tau, pt.pos, pt.vel, pt.acc);
            log.steps.push_back(st);
            if (st.viol.collision > 0.0) {
                log.collision = true;
                log.end_time = st.t;
                break;
            }
            if ((pt.pos - goal).norm() <= sim.success_radius) {
                log.reached = true;
                log.end_time = st.t;
                break;
            }
        }
        if (log.reached || log.collision) break;

        const TrajPoint next = eval_point(basis, rec.xi, sim.replan_dt);
        ego.pos = next.pos;
        ego.vel = next.vel;
        ego.acc = next.acc;
        cur = propagate_obstacles(cur, sim.replan_dt, basis);
        t += sim.replan_dt;
        ++replan_idx;
    }
    if (log.end_time == 0.0 && !log.steps.empty()) log.end_time = log.steps.back().t;
    return log;
}

Metrics compute_metrics(const SimLog& log, const Eigen::Vector2d& goal,
                        const SimConfig& sim) {
    if (log.steps.empty()) throw EmptyLog("simulation log has no steps");
    Metrics m;
    m.min_fde = std::numeric_limits<double>::infinity();
    for (const auto& p : log.plans) m.min_fde = std::min(m.min_fde, p.endpoint_dist);
    if (log.plans.empty()) {
        const auto& st = log.steps.front();
        m.min_fde = std::hypot(st.x - goal.x(), st.y - goal.y());
    }
    double acc_sum = 0.0;
    bool collision = false;
    for (const auto& st : log.steps) {
        acc_sum += std::hypot(st.ax, st.ay);
        if (st.viol.collision > 0.0) collision = true;
    }
    m.smoothness = acc_sum / static_cast<double>(log.steps.size());
    const auto& last = log.steps.back();
    m.success = std::hypot(last.x - goal.x(), last.y - goal.y()) <= sim.success_radius;
    m.collision = collision;
    m.time_to_goal = m.success ? last.t : log.end_time;
    return m;
}

std::vector<ScenarioCase> generate_corpus(int n, std::uint64_t seed,
                                          const BasisSet& basis,
                                          const PlannerConfig& planner) {
    if (n < 1) throw CorpusGenerationFailed("corpus size must be >= 1");
    std::vector<ScenarioCase> out;
    out.reserve(n);
    std::mt19937_64 rng(mix_seed(seed, 0xc0f5));
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

    for (int idx = 0; idx < n; ++idx) {
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            ScenarioCase c;
            c.scene.y_lb = -1.75;
            c.scene.y_ub = 1.75;
            c.scene.v_min = 0.01;
            c.scene.v_max = 10.0;
            c.scene.a_max = 4.0;
            c.scene.ell_a = 3.5;
            c.scene.ell_b = 1.0;
            c.scene.ego0.pos = {0.0, uniform(-0.5, 0.5)};
            c.scene.ego0.vel = {uniform(3.0, 8.0), 0.0};
            c.scene.ego0.acc = {0.0, 0.0};
            c.goal = {uniform(20.0, 50.0), uniform(-1.2, 1.2)};

            const int n_obs = static_cast<int>(uniform(0.0, 5.999));
            bool ok = true;
            int n_slow = 0;
            double last_slow_x = -1e9;
            for (int j = 0; j < n_obs; ++j) {
                const double ox = uniform(12.0, 55.0);
                const double oy = uniform(-1.2, 1.2);
                const double ov = uniform(0.0, 8.0);
                // Slow traffic can park a blockade in the lane, so it stays
                // sparse, off-center and clear of the goal region; faster
                // traffic washes out over the horizon on its own.
                if (ov < 2.0) {
                    ++n_slow;
                    if (n_slow > 2 || std::abs(oy) < 0.8 ||
                        std::abs(ox - c.goal.x()) < 12.0 ||
                        std::abs(ox - last_slow_x) < 12.0) {
                        ok = false;
                        break;
                    }
                    last_slow_x = ox;
                }
                c.scene.obstacles.push_back(make_obstacle(ox, oy, ov, 0.0, basis));
            }
            if (!ok) continue;

            // Coarse reachability certificate over a (v_d, y_d) grid on the
            // margin-tightened scene the closed loop will actually plan with.
            Scene cert = c.scene.with_margins(planner.ellipse_margin, planner.v_margin,
                                              planner.a_margin);
            const double d0 = (c.goal - c.scene.ego0.pos).norm();
            bool reachable = false;
            for (double vd = 1.0; vd <= cert.v_max + 1e-9 && !reachable; vd += 1.0) {
                for (double yd = -1.5; yd <= 1.5 + 1e-9 && !reachable; yd += 0.25) {
                    BehavioralInput p;
                    p.v_d = vd;
                    p.y_d = yd;
                    const QpProblem qp = build_qp(basis, planner.weights, p, cert.ego0);
                    const TrajCoeffs xi = solve_eq_qp(qp).xi;
                    const ProjectionResult res = project(xi, cert, basis, planner.proj);
                    if (res.max_violation.max() > 1e-2) continue;
                    const Eigen::RowVectorXd wT = basis.W.row(basis.m - 1);
                    const Eigen::Vector2d end{wT.dot(res.xi_proj.cx),
                                              wT.dot(res.xi_proj.cy)};
                    if ((end - c.goal).norm() < d0 - 2.0) reachable = true;
                }
            }
            if (!reachable) continue;
            out.push_back(std::move(c));
            placed = true;
        }
        if (!placed) {
            throw CorpusGenerationFailed("could not certify a reachable scenario in "
                                         "1000 attempts");
        }
    }
    return out;
}

}  // namespace fplan
