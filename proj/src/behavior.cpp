#include "fplan/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fplan {

std::vector<BehavioralInput> sample_behaviors(const BehaviorDistribution& dist,
                                              const Scene& scene, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nv(dist.v_mean, std::max(0.0, dist.v_std));
    std::normal_distribution<double> ny(dist.y_mean, std::max(0.0, dist.y_std));
    std::vector<BehavioralInput> out;
    out.reserve(dist.num_samples);
    for (int j = 0; j < dist.num_samples; ++j) {
        BehavioralInput p;
        p.v_d = dist.v_std > 0.0 ? nv(rng) : dist.v_mean;
        p.y_d = dist.y_std > 0.0 ? ny(rng) : dist.y_mean;
        p.v_d = std::clamp(p.v_d, scene.v_min, scene.v_max);
        p.y_d = std::clamp(p.y_d, scene.y_lb, scene.y_ub);
        out.push_back(p);
    }
    return out;
}

std::vector<CandidateOutcome> evaluate_candidates(const std::vector<BehavioralInput>& batch,
                                                  const Scene& scene,
                                                  const BasisSet& basis,
                                                  const Eigen::Vector2d& goal,
                                                  const SetpointWeights& w,
                                                  const ProjectionParams& params) {
    std::vector<TrajCoeffs> seeds;
    seeds.reserve(batch.size());
    for (const auto& p : batch) {
        if (p.term || p.partial) {
            throw DimensionMismatch(
                "batch evaluation assumes plain (v_d, y_d) members");
        }
        const QpProblem qp = build_qp(basis, w, p, scene.ego0);
        seeds.push_back(solve_eq_qp(qp).xi);
    }
    const std::vector<ProjectionResult> projected =
        project_batch(seeds, scene, basis, params);
    std::vector<CandidateOutcome> out(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        out[i].input = batch[i];
        out[i].result = projected[i];
        out[i].goal = goal_loss(projected[i].xi_proj, basis, goal);
        out[i].planner = planner_loss(projected[i].xi_proj, scene, basis);
    }
    return out;
}

namespace {

double candidate_loss(const BehavioralInput& p, const Scene& scene,
                      const BasisSet& basis, const Eigen::Vector2d& goal,
                      const SetpointWeights& w, const ProjectionParams& params,
                      const LossWeights& lw) {
    const QpProblem qp = build_qp(basis, w, p, scene.ego0);
    const TrajCoeffs xi = solve_eq_qp(qp).xi;
    const ProjectionResult res = project(xi, scene, basis, params);
    return lw.w_goal * goal_loss(res.xi_proj, basis, goal) +
           lw.w_planner * planner_loss(res.xi_proj, scene, basis);
}

}  // namespace

std::vector<BehavioralInput> refine_behaviors(const std::vector<BehavioralInput>& batch,
                                              const Scene& scene, const BasisSet& basis,
                                              const Eigen::Vector2d& goal,
                                              const SetpointWeights& w,
                                              const ProjectionParams& params,
                                              const RefinementConfig& cfg) {
    GradParams gp;
    gp.unroll_iters = cfg.unroll_iters;
    std::vector<BehavioralInput> out;
    out.reserve(batch.size());
    for (const auto& start : batch) {
        BehavioralInput cur = start;
        double cur_loss =
            candidate_loss(cur, scene, basis, goal, w, params, cfg.loss_weights);
        for (int step = 0; step < cfg.steps; ++step) {
            const LossReport rep = loss_gradients(cur, scene, basis, goal, w, params,
                                                  gp, cfg.loss_weights);
            const double gnorm = rep.grad_p.norm();
            if (!(gnorm > 1e-12)) break;
            double lr = cfg.lr;
            bool accepted = false;
            for (int trial = 0; trial < 6; ++trial) {
                BehavioralInput cand = cur;
                cand.v_d = std::clamp(cur.v_d - lr * rep.grad_p(0), scene.v_min,
                                      scene.v_max);
                cand.y_d = std::clamp(cur.y_d - lr * rep.grad_p(1), scene.y_lb,
                                      scene.y_ub);
                const double cand_loss = candidate_loss(cand, scene, basis, goal, w,
                                                        params, cfg.loss_weights);
                if (cand_loss <= cur_loss) {
                    cur = cand;
                    cur_loss = cand_loss;
                    accepted = true;
                    break;
                }
                lr *= 0.5;
            }
            if (!accepted) break;  // descent stalled, keep the best iterate
        }
        out.push_back(cur);
    }
    return out;
}

int select_best(const std::vector<CandidateOutcome>& outcomes, const LossWeights& lw) {
    if (outcomes.empty()) throw EmptyBatch("select_best needs at least one candidate");
    int best = 0;
    for (int i = 1; i < static_cast<int>(outcomes.size()); ++i) {
        const double ci = outcomes[i].combined(lw);
        const double cb = outcomes[best].combined(lw);
        if (ci < cb || (ci == cb && outcomes[i].planner < outcomes[best].planner)) {
            best = i;
        }
    }
    return best;
}

}  // namespace fplan
