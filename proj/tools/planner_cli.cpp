#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fplan/grad.hpp"
#include "fplan/io.hpp"
#include "fplan/scenario.hpp"

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitGradMismatch = 3;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct CommonArgs {
    std::string scenario_path;
    std::string out_dir = "out";
    std::string config_path;
    std::uint64_t seed = 0;
};

fplan::ScenarioDoc load(const CommonArgs& args, bool closed_loop) {
    fplan::RunConfig base;
    if (closed_loop) base.planner = fplan::closed_loop_defaults();
    if (!args.config_path.empty()) {
        fplan::apply_config_json(fplan::read_text_file(args.config_path), base);
    }
    return fplan::load_scenario_file(args.scenario_path, base);
}

fplan::BehaviorDistribution goal_seeded_distribution(const fplan::Scene& scene,
                                                     const Eigen::Vector2d& goal,
                                                     const fplan::PlannerConfig& pc,
                                                     double horizon) {
    fplan::BehaviorDistribution d;
    const double dist = (goal - scene.ego0.pos).norm();
    d.v_mean = std::clamp(1.5 * dist / horizon, scene.v_min + 0.1, scene.v_max);
    d.v_std = pc.v_std;
    d.y_mean = std::clamp(goal.y(), scene.y_lb, scene.y_ub);
    d.y_std = pc.y_std;
    d.num_samples = pc.num_samples;
    return d;
}

json violations_json(const fplan::Violations& v) {
    return json{{"collision", v.collision},
                {"speed", v.speed},
                {"accel", v.accel},
                {"lane", v.lane}};
}

int cmd_plan(const CommonArgs& args) {
    const auto t0 = Clock::now();
    const fplan::ScenarioDoc doc = load(args, false);
    const auto& cfg = doc.config;
    const fplan::BasisSet basis =
        fplan::make_basis(cfg.basis.degree, cfg.basis.horizon, cfg.basis.samples);

    fplan::Scene plan_scene = doc.scene.with_margins(
        cfg.planner.ellipse_margin, cfg.planner.v_margin, cfg.planner.a_margin);
    const auto dist_cfg =
        goal_seeded_distribution(plan_scene, doc.goal, cfg.planner, basis.horizon);
    auto batch = fplan::sample_behaviors(dist_cfg, plan_scene, args.seed);
    batch = fplan::refine_behaviors(batch, plan_scene, basis, doc.goal,
                                    cfg.planner.weights, cfg.planner.proj,
                                    cfg.planner.refine);
    const auto outcomes =
        fplan::evaluate_candidates(batch, plan_scene, basis, doc.goal,
                                   cfg.planner.weights, cfg.planner.proj);
    const int best = fplan::select_best(outcomes, cfg.planner.refine.loss_weights);
    const auto& chosen = outcomes[best];
    const fplan::Violations nominal_viol =
        fplan::evaluate_violations(chosen.result.xi_proj, doc.scene, basis);
    const bool feasible = nominal_viol.max() <= 1e-2;

    fplan::atomic_write_text(args.out_dir + "/trajectory.csv",
                             fplan::traj_csv(basis, chosen.result.xi_proj));
    const fplan::TrajSamples s = fplan::eval_traj(basis, chosen.result.xi_proj);
    std::vector<Eigen::Vector2d> path;
    for (int k = 0; k < basis.m; ++k) path.push_back({s.x(k), s.y(k)});
    fplan::atomic_write_text(
        args.out_dir + "/plan.svg",
        fplan::scene_svg(doc.scene, doc.goal, cfg.sim.success_radius, path));

    json summary{{"feasible", feasible},
                 {"selected", {{"v_d", chosen.input.v_d}, {"y_d", chosen.input.y_d}}},
                 {"goal_loss", chosen.goal},
                 {"planner_loss", chosen.planner},
                 {"max_violation", violations_json(nominal_viol)},
                 {"projection",
                  {{"converged", chosen.result.converged},
                   {"iters", chosen.result.iters},
                   {"residual", chosen.result.final_residual}}},
                 {"timing_ms", ms_since(t0)}};
    fplan::atomic_write_text(args.out_dir + "/summary.json", summary.dump(2) + "\n");
    std::cout << "plan: " << (feasible ? "feasible" : "infeasible")
              << " v_d=" << chosen.input.v_d << " y_d=" << chosen.input.y_d
              << " goal_loss=" << chosen.goal << "\n";
    return feasible ? kExitOk : kExitInfeasible;
}

int cmd_simulate(const CommonArgs& args) {
    const auto t0 = Clock::now();
    const fplan::ScenarioDoc doc = load(args, true);
    const auto& cfg = doc.config;
    const fplan::BasisSet basis =
        fplan::make_basis(cfg.basis.degree, cfg.basis.horizon, cfg.basis.samples);

    const fplan::SimLog log = fplan::run_closed_loop(doc.scene, doc.goal, cfg.planner,
                                                     cfg.sim, basis, args.seed);
    const fplan::Metrics metrics = fplan::compute_metrics(log, doc.goal, cfg.sim);

    fplan::atomic_write_text(args.out_dir + "/simlog.csv", fplan::simlog_csv(log));
    std::vector<Eigen::Vector2d> path;
    for (const auto& st : log.steps) path.push_back({st.x, st.y});
    fplan::atomic_write_text(
        args.out_dir + "/sim.svg",
        fplan::scene_svg(doc.scene, doc.goal, cfg.sim.success_radius, path));
    json mj{{"min_fde", metrics.min_fde},
            {"smoothness", metrics.smoothness},
            {"success", metrics.success},
            {"collision", metrics.collision},
            {"time_to_goal", metrics.time_to_goal},
            {"steps", log.steps.size()},
            {"replans", log.plans.size()},
            {"timing_ms", ms_since(t0)}};
    fplan::atomic_write_text(args.out_dir + "/metrics.json", mj.dump(2) + "\n");
    std::cout << "simulate: success=" << (metrics.success ? "true" : "false")
              << " collision=" << (metrics.collision ? "true" : "false")
              << " min_fde=" << metrics.min_fde << "\n";
    return kExitOk;
}

int cmd_gradcheck(const CommonArgs& args, double eps) {
    const fplan::ScenarioDoc doc = load(args, false);
    const auto& cfg = doc.config;
    const fplan::BasisSet basis =
        fplan::make_basis(cfg.basis.degree, cfg.basis.horizon, cfg.basis.samples);
    fplan::Scene plan_scene = doc.scene.with_margins(
        cfg.planner.ellipse_margin, cfg.planner.v_margin, cfg.planner.a_margin);

    fplan::BehavioralInput p;
    const double dist = (doc.goal - plan_scene.ego0.pos).norm();
    p.v_d = std::clamp(1.5 * dist / basis.horizon, plan_scene.v_min + 0.1,
                       plan_scene.v_max);
    p.y_d = std::clamp(doc.goal.y(), plan_scene.y_lb, plan_scene.y_ub);

    fplan::GradParams gp;
    // A finite-difference probe that straddles a clip corner is meaningless,
    // so the exclusion radius scales with the probe step.
    gp.kink_eps = std::max(1e-6, 100.0 * eps);
    const fplan::PipelineJacobian jac = fplan::pipeline_jacobian(
        p, plan_scene, basis, cfg.planner.weights, cfg.planner.proj, gp);

    Eigen::MatrixXd fd(jac.d_xi_d_p.rows(), 2);
    for (int c = 0; c < 2; ++c) {
        fplan::BehavioralInput hi = p, lo = p;
        (c == 0 ? hi.v_d : hi.y_d) += eps;
        (c == 0 ? lo.v_d : lo.y_d) -= eps;
        const auto fhi = fplan::run_pipeline_fixed(hi, plan_scene, basis,
                                                   cfg.planner.weights,
                                                   cfg.planner.proj, gp.unroll_iters);
        const auto flo = fplan::run_pipeline_fixed(lo, plan_scene, basis,
                                                   cfg.planner.weights,
                                                   cfg.planner.proj, gp.unroll_iters);
        fd.col(c) = (fhi.xi_proj.stacked() - flo.xi_proj.stacked()) / (2.0 * eps);
    }
    const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
    const double rel = (jac.d_xi_d_p - fd).cwiseAbs().maxCoeff() / scale;
    std::printf("gradcheck eps=%g unroll=%d max_rel_err[p]=%.3e%s\n", eps,
                jac.unroll_iters, rel, jac.kink ? " KinkWarning" : "");
    if (jac.kink) {
        std::printf("gradcheck: non-smooth evaluation point, excluded from the gate\n");
        return kExitOk;
    }
    return rel <= 1e-4 ? kExitOk : kExitGradMismatch;
}

int cmd_batch(const CommonArgs& args, int size) {
    const auto t0 = Clock::now();
    fplan::RunConfig cfg;
    cfg.planner = fplan::closed_loop_defaults();
    if (!args.config_path.empty()) {
        fplan::apply_config_json(fplan::read_text_file(args.config_path), cfg);
    }
    const fplan::BasisSet basis =
        fplan::make_basis(cfg.basis.degree, cfg.basis.horizon, cfg.basis.samples);

    const auto corpus = fplan::generate_corpus(size, args.seed, basis, cfg.planner);
    std::string csv = "idx,n_obstacles,goal_x,goal_y,success,collision,min_fde,"
                      "smoothness,time_to_goal\n";
    int successes = 0, collisions = 0;
    double fde_sum = 0.0, smooth_sum = 0.0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& c = corpus[i];
        const fplan::SimLog log = fplan::run_closed_loop(
            c.scene, c.goal, cfg.planner, cfg.sim, basis,
            fplan::mix_seed(args.seed, 1000 + i));
        const fplan::Metrics m = fplan::compute_metrics(log, c.goal, cfg.sim);
        successes += m.success ? 1 : 0;
        collisions += m.collision ? 1 : 0;
        fde_sum += m.min_fde;
        smooth_sum += m.smoothness;
        char row[256];
        std::snprintf(row, sizeof(row), "%zu,%zu,%.6g,%.6g,%d,%d,%.6g,%.6g,%.6g\n", i,
                      c.scene.obstacles.size(), c.goal.x(), c.goal.y(),
                      m.success ? 1 : 0, m.collision ? 1 : 0, m.min_fde, m.smoothness,
                      m.time_to_goal);
        csv += row;
    }
    const double n = static_cast<double>(corpus.size());
    json summary{{"count", corpus.size()},
                 {"success_rate", successes / n},
                 {"collisions", collisions},
                 {"mean_min_fde", fde_sum / n},
                 {"mean_smoothness", smooth_sum / n},
                 {"timing_ms", ms_since(t0)}};
    fplan::atomic_write_text(args.out_dir + "/batch.csv", csv);
    fplan::atomic_write_text(args.out_dir + "/batch_summary.json",
                             summary.dump(2) + "\n");
    std::cout << "batch: n=" << corpus.size() << " success_rate=" << successes / n
              << " collisions=" << collisions << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frenet-frame trajectory planner"};
    app.require_subcommand(1);

    CommonArgs args;
    double eps = 1e-5;
    int batch_size = 100;

    auto add_common = [&](CLI::App* cmd, bool needs_scenario) {
        if (needs_scenario) {
            cmd->add_option("scenario", args.scenario_path, "scenario JSON path")
                ->required();
        }
        cmd->add_option("--out", args.out_dir, "output directory");
        cmd->add_option("--seed", args.seed, "RNG seed");
        cmd->add_option("--config", args.config_path, "config JSON overriding defaults");
    };

    auto* plan = app.add_subcommand("plan", "single open-loop plan");
    add_common(plan, true);
    auto* simulate = app.add_subcommand("simulate", "closed-loop run with metrics");
    add_common(simulate, true);
    auto* gradcheck =
        app.add_subcommand("gradcheck", "unrolled Jacobian vs central differences");
    add_common(gradcheck, true);
    gradcheck->add_option("--eps", eps, "finite-difference step");
    auto* batch = app.add_subcommand("batch", "generated corpus evaluation");
    add_common(batch, false);
    batch->add_option("--size", batch_size, "number of scenarios");

    CLI11_PARSE(app, argc, argv);

    try {
        if (plan->parsed()) return cmd_plan(args);
        if (simulate->parsed()) return cmd_simulate(args);
        if (gradcheck->parsed()) return cmd_gradcheck(args, eps);
        if (batch->parsed()) return cmd_batch(args, batch_size);
    } catch (const fplan::ScenarioError& e) {
        std::cerr << "scenario error: " << e.what() << "\n";
        return kExitInput;
    } catch (const fplan::CorpusGenerationFailed& e) {
        std::cerr << "corpus error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}
