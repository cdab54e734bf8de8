#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fplan/io.hpp"
#include "fplan/sim.hpp"
#include "oracles.hpp"

using namespace fplan;

namespace {

BasisSet default_basis() { return make_basis(10, 6.0, 30); }

Scene corpus_like_scene() {
    Scene s;
    s.ego0.pos = {0.0, 0.0};
    s.ego0.vel = {5.0, 0.0};
    s.ego0.acc = {0.0, 0.0};
    s.ell_b = 1.0;
    return s;
}

}  // namespace

TEST_CASE("obstacle propagation: identity, shift, composition") {
    const BasisSet basis = default_basis();
    Scene s = corpus_like_scene();
    s.obstacles.push_back(make_obstacle(10.0, 0.5, 2.0, 0.0, basis));

    const Scene same = propagate_obstacles(s, 0.0, basis);
    CHECK(same.obstacles[0].x == 10.0);
    CHECK(same.obstacles[0].y == 0.5);
    CHECK((same.obstacles[0].xs - s.obstacles[0].xs).cwiseAbs().maxCoeff() == 0.0);

    const Scene moved = propagate_obstacles(s, 0.5, basis);
    CHECK(moved.obstacles[0].x == doctest::Approx(11.0));
    CHECK(moved.obstacles[0].y == doctest::Approx(0.5));

    const Scene twice =
        propagate_obstacles(propagate_obstacles(s, 0.25, basis), 0.25, basis);
    CHECK(twice.obstacles[0].x == doctest::Approx(moved.obstacles[0].x));
    CHECK((twice.obstacles[0].xs - moved.obstacles[0].xs).cwiseAbs().maxCoeff() <
          1e-12);
}

TEST_CASE("metrics from a hand-built log") {
    SimConfig sim;
    SimLog log;
    for (int i = 0; i <= 20; ++i) {
        SimStep st;
        st.t = 0.1 * i;
        st.x = 2.0 * st.t;  // constant velocity straight line
        st.y = 0.0;
        st.vx = 2.0;
        st.ax = 0.0;
        st.ay = 0.0;
        log.steps.push_back(st);
    }
    PlanRecord rec;
    rec.endpoint_dist = 0.0;
    log.plans.push_back(rec);
    PlanRecord far;
    far.endpoint_dist = 4.0;
    log.plans.push_back(far);

    const Eigen::Vector2d goal{4.0, 0.0};  // exactly the final position
    const Metrics m = compute_metrics(log, goal, sim);
    CHECK(m.min_fde == 0.0);
    CHECK(m.success);
    CHECK(m.smoothness == 0.0);
    CHECK_FALSE(m.collision);

    const Eigen::Vector2d near_goal{4.0, 2.9};  // 2.9 m away, inside the radius
    CHECK(compute_metrics(log, near_goal, sim).success);
    const Eigen::Vector2d far_goal{4.0, 3.1};
    CHECK_FALSE(compute_metrics(log, far_goal, sim).success);

    CHECK_THROWS_AS(compute_metrics(SimLog{}, goal, sim), EmptyLog);
}

TEST_CASE("closed loop reaches a nearby goal without collisions") {
    const BasisSet basis = default_basis();
    const Scene scene = corpus_like_scene();
    const Eigen::Vector2d goal{10.0, 0.0};
    const PlannerConfig planner = closed_loop_defaults();
    SimConfig sim;

    const SimLog log = run_closed_loop(scene, goal, planner, sim, basis, 5);
    const Metrics m = compute_metrics(log, goal, sim);
    CHECK(m.success);
    CHECK_FALSE(m.collision);
    CHECK(m.time_to_goal <= 6.0);
    CHECK(m.min_fde <= sim.success_radius);
}

TEST_CASE("blocked lane: no collision, no success, full duration") {
    const BasisSet basis = default_basis();
    Scene scene = corpus_like_scene();
    // Static wall spanning the lane: neighbouring gaps are narrower than the
    // footprint ellipse everywhere.
    scene.obstacles.push_back(make_obstacle(15.0, -1.2, 0.0, 0.0, basis));
    scene.obstacles.push_back(make_obstacle(15.5, 0.0, 0.0, 0.0, basis));
    scene.obstacles.push_back(make_obstacle(15.0, 1.2, 0.0, 0.0, basis));
    const Eigen::Vector2d goal{30.0, 0.0};
    const PlannerConfig planner = closed_loop_defaults();
    SimConfig sim;
    sim.max_time = 8.0;  // enough to reach the wall if the planner misbehaves

    const SimLog log = run_closed_loop(scene, goal, planner, sim, basis, 11);
    const Metrics m = compute_metrics(log, goal, sim);
    CHECK_FALSE(m.success);
    CHECK_FALSE(m.collision);
    CHECK(log.steps.back().t >= sim.max_time - 0.5 - 1e-9);
    // The ego stayed short of the wall's footprint.
    for (const auto& st : log.steps) CHECK(st.x < 15.0 - scene.ell_a + 0.6);
}

TEST_CASE("replanning hands over the exact boundary state") {
    const BasisSet basis = default_basis();
    Scene scene = corpus_like_scene();
    scene.obstacles.push_back(make_obstacle(25.0, 0.8, 2.0, 0.0, basis));
    const Eigen::Vector2d goal{35.0, 0.5};
    const PlannerConfig planner = closed_loop_defaults();
    SimConfig sim;

    const SimLog log = run_closed_loop(scene, goal, planner, sim, basis, 17);
    REQUIRE(log.plans.size() >= 2);
    for (std::size_t i = 1; i < log.plans.size(); ++i) {
        // The new plan's initial state equals the previous plan's state at
        // the replan instant.
        const TrajPoint prev = eval_point(basis, log.plans[i - 1].xi, sim.replan_dt);
        const TrajPoint cur = eval_point(basis, log.plans[i].xi, 0.0);
        CHECK((prev.pos - cur.pos).norm() <= 1e-6);
        CHECK((prev.vel - cur.vel).norm() <= 1e-6);
        CHECK((prev.acc - cur.acc).norm() <= 1e-6);
    }

    // No-teleport: per-step displacement bounded by v_max * sim_dt.
    for (std::size_t i = 1; i < log.steps.size(); ++i) {
        const double dx = log.steps[i].x - log.steps[i - 1].x;
        const double dy = log.steps[i].y - log.steps[i - 1].y;
        CHECK(std::hypot(dx, dy) <= scene.v_max * sim.sim_dt + 1e-6);
    }

    // Collision flag consistency with the logged per-step violations.
    const Metrics m = compute_metrics(log, goal, sim);
    bool any = false;
    for (const auto& st : log.steps) any = any || st.viol.collision > 0.0;
    CHECK(m.collision == any);
}

TEST_CASE("closed loop is deterministic for a fixed seed") {
    const BasisSet basis = default_basis();
    Scene scene = corpus_like_scene();
    scene.obstacles.push_back(make_obstacle(20.0, -0.6, 1.5, 0.0, basis));
    const Eigen::Vector2d goal{28.0, 0.8};
    const PlannerConfig planner = closed_loop_defaults();
    SimConfig sim;

    const SimLog a = run_closed_loop(scene, goal, planner, sim, basis, 99);
    const SimLog b = run_closed_loop(scene, goal, planner, sim, basis, 99);
    CHECK(simlog_csv(a) == simlog_csv(b));

    const SimLog c = run_closed_loop(scene, goal, planner, sim, basis, 100);
    CHECK(simlog_csv(a) != simlog_csv(c));
}

TEST_CASE("corpus generation: determinism, lane bounds, reachability") {
    const BasisSet basis = default_basis();
    const auto a = generate_corpus(5, 31, basis);
    const auto b = generate_corpus(5, 31, basis);
    REQUIRE(a.size() == 5);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].goal.x() == b[i].goal.x());
        CHECK(a[i].goal.y() == b[i].goal.y());
        CHECK(a[i].scene.obstacles.size() == b[i].scene.obstacles.size());
        CHECK(a[i].goal.y() >= a[i].scene.y_lb);
        CHECK(a[i].goal.y() <= a[i].scene.y_ub);
        CHECK(a[i].goal.x() >= 20.0);
        CHECK(a[i].goal.x() <= 50.0);
        for (const auto& o : a[i].scene.obstacles) {
            CHECK(std::hypot(o.x - a[i].scene.ego0.pos.x(),
                             o.y - a[i].scene.ego0.pos.y()) >= 10.0);
        }
        // Certification promise: some grid setpoint yields a feasible,
        // goal-approaching projection on the margin-tightened scene.
        const PlannerConfig pl;
        Scene cert = a[i].scene.with_margins(pl.ellipse_margin, pl.v_margin,
                                             pl.a_margin);
        bool reachable = false;
        const double d0 = (a[i].goal - a[i].scene.ego0.pos).norm();
        for (double vd = 1.0; vd <= cert.v_max + 1e-9 && !reachable; vd += 1.0) {
            for (double yd = -1.5; yd <= 1.5 + 1e-9 && !reachable; yd += 0.25) {
                const QpProblem qp =
                    build_qp(basis, pl.weights, {vd, yd, {}, {}}, cert.ego0);
                const ProjectionResult res =
                    project(solve_eq_qp(qp).xi, cert, basis, pl.proj);
                if (res.max_violation.max() > 1e-2) continue;
                const Eigen::RowVectorXd wT = basis.W.row(basis.m - 1);
                const Eigen::Vector2d end{wT.dot(res.xi_proj.cx),
                                          wT.dot(res.xi_proj.cy)};
                if ((end - a[i].goal).norm() < d0 - 2.0) reachable = true;
            }
        }
        CHECK(reachable);
    }
}
