#include "fplan/grad.hpp"

#include <cmath>

namespace fplan {

namespace {

// Layout of the differentiated inputs: columns 0..1 are (v_d, y_d), then the
// terminal values in equality-row order, then the pinned coefficients.
struct InputLayout {
    int n_p = 2;
    int n_term = 0;
    int n_partial = 0;
    int total() const { return n_p + n_term + n_partial; }
};

InputLayout layout_of(const BehavioralInput& p) {
    InputLayout lay;
    if (p.term) lay.n_term = p.term->acc ? 6 : 4;
    if (p.partial) lay.n_partial = static_cast<int>(p.partial->indices.size());
    return lay;
}

// dq/dinput. q is linear in (v_d, y_d), so assembly differences are exact.
Eigen::MatrixXd q_sensitivities(const BasisSet& basis, const SetpointWeights& w,
                                const BehavioralInput& p, const EgoBoundary& b0,
                                const InputLayout& lay) {
    const QpProblem base = build_qp(basis, w, p, b0);
    Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(base.q.size(), lay.total());
    BehavioralInput pv = p;
    pv.v_d += 1.0;
    dq.col(0) = build_qp(basis, w, pv, b0).q - base.q;
    BehavioralInput py = p;
    py.y_d += 1.0;
    dq.col(1) = build_qp(basis, w, py, b0).q - base.q;
    return dq;
}

// db/dinput: terminal and partial values enter b as single entries.
Eigen::MatrixXd b_sensitivities(const Eigen::Index n_eq, const InputLayout& lay) {
    Eigen::MatrixXd db = Eigen::MatrixXd::Zero(n_eq, lay.total());
    int row = 6;  // rows after the initial conditions
    for (int c = 0; c < lay.n_term + lay.n_partial; ++c) {
        db(row + c, lay.n_p + c) = 1.0;
    }
    return db;
}

struct UnrollResult {
    TrajCoeffs xi_star;
    TrajCoeffs xi_proj;
    Eigen::MatrixXd d_xi;  // 2n x K, tangents of xi_proj
    bool kink = false;
};

// Forward pass with K tangent columns propagated through the setpoint KKT
// solve and a fixed number of AM sweeps. With K = 0 this is the primal
// pipeline that finite differences evaluate.
UnrollResult unroll_pipeline(const BehavioralInput& p, const Scene& scene,
                             const BasisSet& basis, const SetpointWeights& w,
                             const ProjectionParams& params, int iters,
                             double kink_eps, bool with_tangents) {
    const int n = basis.n_coef();
    const int nx = 2 * n;
    const InputLayout lay = layout_of(p);
    const int K = with_tangents ? lay.total() : 0;

    const QpProblem qp = build_qp(basis, w, p, scene.ego0);
    const Eigen::Index ne = qp.A.rows();

    Eigen::MatrixXd Kqp = Eigen::MatrixXd::Zero(nx + ne, nx + ne);
    Kqp.topLeftCorner(nx, nx) = qp.Q;
    Kqp.topRightCorner(nx, ne) = qp.A.transpose();
    Kqp.bottomLeftCorner(ne, nx) = qp.A;
    Eigen::FullPivLU<Eigen::MatrixXd> qp_lu(Kqp);
    if (!qp_lu.isInvertible()) throw SingularKkt("setpoint KKT matrix is singular");

    Eigen::VectorXd rhs(nx + ne);
    rhs << -qp.q, qp.b;
    const Eigen::VectorXd sol = qp_lu.solve(rhs);
    const TrajCoeffs xi_star = TrajCoeffs::from_stacked(sol.head(nx));

    Eigen::MatrixXd d_xi_star(nx, K), db;
    if (K > 0) {
        const Eigen::MatrixXd dq = q_sensitivities(basis, w, p, scene.ego0, lay);
        db = b_sensitivities(ne, lay);
        Eigen::MatrixXd rhs_t(nx + ne, K);
        rhs_t.topRows(nx) = -dq;
        rhs_t.bottomRows(ne) = db;
        d_xi_star = qp_lu.solve(rhs_t).topRows(nx);
    }

    const StackedConstraints sc = stack_constraints(scene, basis);
    const KktFactor kkt = build_kkt_factor(sc, qp.A, params.rho);
    ProjectionState st = init_state(xi_star, scene, sc, basis, params);

    UnrollResult out;
    out.xi_star = xi_star;

    TrajCoeffs xi = xi_star;
    Eigen::MatrixXd d_xi = d_xi_star;

    const int m = sc.m;
    const int no = sc.n_obs;
    const int ra = sc.rows_axis();
    const double a = scene.ell_a, b_ax = scene.ell_b;

    Eigen::MatrixXd de(sc.rows_total(), K);
    Eigen::MatrixXd de_next(sc.rows_total(), K);

    // Tangents of the initial e, matching init_state.
    auto family_tangents = [&](const TrajSamples& s, const Eigen::MatrixXd& d_c,
                               Eigen::MatrixXd& de_out) {
        const Eigen::MatrixXd dsx = basis.W * d_c.topRows(n);
        const Eigen::MatrixXd dsy = basis.W * d_c.bottomRows(n);
        const Eigen::MatrixXd dvx = basis.Wd * d_c.topRows(n);
        const Eigen::MatrixXd dvy = basis.Wd * d_c.bottomRows(n);
        const Eigen::MatrixXd dax = basis.Wdd * d_c.topRows(n);
        const Eigen::MatrixXd day = basis.Wdd * d_c.bottomRows(n);

        // On rows where the radial clip is inactive, the polar target map is
        // the identity (d cos(alpha) = component), so the tangent passes
        // through unchanged. Clipped rows project radially; their tangent
        // follows the normalized-direction derivative. Kinks live exactly at
        // truncation boundaries (and at zero vectors when a positive lower
        // bound forces a direction).
        for (int j = 0; j < no; ++j) {
            for (int k = 0; k < m; ++k) {
                const int idx = j * m + k;
                const double dx = s.x(k) - sc.xo(idx);
                const double dy = s.y(k) - sc.yo(idx);
                const double px = dx / a, py = dy / b_ax;
                const double r2 = px * px + py * py;
                const double dhat = std::sqrt(r2);
                if (std::abs(dhat - 1.0) < kink_eps ||
                    std::abs(dhat - params.d_big) < kink_eps || dhat < 1e-3) {
                    out.kink = true;
                }
                if (dhat > 1.0 && dhat < params.d_big) {
                    de_out.row(idx) = dsx.row(k);
                    de_out.row(ra + idx) = dsy.row(k);
                } else if (dhat > 1e-9) {
                    // d pinned at the bound, alpha = atan2(py, px)
                    const Eigen::RowVectorXd dalpha =
                        (px * (dsy.row(k) / b_ax) - py * (dsx.row(k) / a)) / r2;
                    const double c = std::cos(st.alpha_o(idx));
                    const double sn = std::sin(st.alpha_o(idx));
                    const double dval = st.d_o(idx);
                    de_out.row(idx) = -a * dval * sn * dalpha;
                    de_out.row(ra + idx) = b_ax * dval * c * dalpha;
                } else {
                    de_out.row(idx).setZero();
                    de_out.row(ra + idx).setZero();
                }
            }
        }
        auto norm_family = [&](int row_x, int row_y, double vx, double vy,
                               const Eigen::RowVectorXd& dvx_r,
                               const Eigen::RowVectorXd& dvy_r, double lo, double hi,
                               double dval) {
            const double v2 = vx * vx + vy * vy;
            const double dhat = std::sqrt(v2);
            if (std::abs(dhat - hi) < kink_eps ||
                (lo > 0.0 && (std::abs(dhat - lo) < kink_eps || dhat < 1e-3))) {
                out.kink = true;  // includes the forced direction near a zero vector
            }
            if (dhat > lo && dhat < hi) {
                de_out.row(row_x) = dvx_r;
                de_out.row(row_y) = dvy_r;
            } else if (dhat > 1e-9) {
                // radial projection onto the active bound circle
                const Eigen::RowVectorXd dn = (vx * dvx_r + vy * dvy_r) / dhat;
                de_out.row(row_x) = dval * (dvx_r - vx / dhat * dn) / dhat;
                de_out.row(row_y) = dval * (dvy_r - vy / dhat * dn) / dhat;
            } else {
                de_out.row(row_x).setZero();
                de_out.row(row_y).setZero();
            }
        };
        for (int k = 0; k < m; ++k) {
            norm_family(no * m + k, ra + no * m + k, s.xd(k), s.yd(k), dvx.row(k),
                        dvy.row(k), scene.v_min, scene.v_max, st.d_v(k));
            norm_family(no * m + m + k, ra + no * m + m + k, s.xdd(k), s.ydd(k),
                        dax.row(k), day.row(k), 0.0, scene.a_max, st.d_a(k));
        }
        // lane slack rows
        const Eigen::VectorXd g = sc.y_lane - sc.G * xi.stacked();
        const Eigen::MatrixXd dg = -(sc.G * d_c);
        for (int i = 0; i < 2 * m; ++i) {
            if (std::abs(g(i)) < kink_eps) out.kink = true;
            if (g(i) > 0.0) {
                de_out.row(2 * ra + i) = -dg.row(i);  // e = y_lane - s, ds = dg
            } else {
                de_out.row(2 * ra + i).setZero();
            }
        }
    };

    if (K > 0) {
        const TrajSamples s0 = eval_traj(basis, xi);
        family_tangents(s0, d_xi, de);
    }

    Eigen::MatrixXd d_lambda = Eigen::MatrixXd::Zero(nx, K);
    Eigen::MatrixXd rhs_t(nx + ne, K);

    for (int it = 0; it < iters; ++it) {
        const TrajSamples samples = eval_traj(basis, xi);
        update_alpha_d(samples, scene, sc, params, st);
        update_slack(xi, sc, st);
        if (K > 0) {
            family_tangents(samples, d_xi, de_next);
            d_lambda += params.rho * (sc.F.transpose() * (sc.F * d_xi - de));
        }
        update_lambda(xi, sc, params, st);  // consumes previous e
        assemble_e(scene, sc, st);
        if (K > 0) de = de_next;

        xi = qp_step(xi_star, sc, st, kkt, qp.b);
        if (K > 0) {
            rhs_t.topRows(nx) =
                d_xi_star - d_lambda + params.rho * (sc.F.transpose() * de);
            rhs_t.bottomRows(ne) = db;
            d_xi = kkt.lu.solve(rhs_t).topRows(nx);
        }
    }

    out.xi_proj = xi;
    out.d_xi = d_xi;
    return out;
}

}  // namespace

PipelineEval run_pipeline_fixed(const BehavioralInput& p, const Scene& scene,
                                const BasisSet& basis, const SetpointWeights& w,
                                const ProjectionParams& params, int iters) {
    const UnrollResult r =
        unroll_pipeline(p, scene, basis, w, params, iters, 1e-6, false);
    return {r.xi_star, r.xi_proj};
}

double goal_loss(const TrajCoeffs& xi, const BasisSet& basis,
                 const Eigen::Vector2d& goal) {
    const Eigen::RowVectorXd wT = basis.W.row(basis.m - 1);
    const double ex = wT.dot(xi.cx) - goal.x();
    const double ey = wT.dot(xi.cy) - goal.y();
    return ex * ex + ey * ey;
}

Eigen::VectorXd goal_loss_grad_xi(const TrajCoeffs& xi, const BasisSet& basis,
                                  const Eigen::Vector2d& goal) {
    const int n = basis.n_coef();
    const Eigen::RowVectorXd wT = basis.W.row(basis.m - 1);
    const double ex = wT.dot(xi.cx) - goal.x();
    const double ey = wT.dot(xi.cy) - goal.y();
    Eigen::VectorXd g(2 * n);
    g.head(n) = 2.0 * ex * wT.transpose();
    g.tail(n) = 2.0 * ey * wT.transpose();
    return g;
}

namespace {

// Stacked hinge terms and their coefficient-space gradients.
void hinge_terms(const TrajCoeffs& xi, const Scene& scene, const BasisSet& basis,
                 std::vector<double>& h, std::vector<Eigen::VectorXd>* grads) {
    const int n = basis.n_coef();
    const TrajSamples s = eval_traj(basis, xi);
    const auto sel = select_obstacles(scene);
    auto push = [&](double g, const Eigen::VectorXd& grad) {
        if (g > 0.0) {
            h.push_back(g);
            if (grads) grads->push_back(grad);
        }
    };
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2 * n);
    for (int j : sel) {
        const auto& obs = scene.obstacles[j];
        for (int k = 0; k < basis.m; ++k) {
            const double px = (s.x(k) - obs.xs(k)) / scene.ell_a;
            const double py = (s.y(k) - obs.ys(k)) / scene.ell_b;
            const double g = 1.0 - px * px - py * py;
            if (g <= 0.0) continue;
            Eigen::VectorXd grad = zero;
            if (grads) {
                grad.head(n) = -2.0 * px / scene.ell_a * basis.W.row(k).transpose();
                grad.tail(n) = -2.0 * py / scene.ell_b * basis.W.row(k).transpose();
            }
            push(g, grad);
        }
    }
    for (int k = 0; k < basis.m; ++k) {
        const double v = std::hypot(s.xd(k), s.yd(k));
        if (v - scene.v_max > 0.0) {
            Eigen::VectorXd grad = zero;
            if (grads && v > 0.0) {
                grad.head(n) = s.xd(k) / v * basis.Wd.row(k).transpose();
                grad.tail(n) = s.yd(k) / v * basis.Wd.row(k).transpose();
            }
            push(v - scene.v_max, grad);
        }
        const double acc = std::hypot(s.xdd(k), s.ydd(k));
        if (acc - scene.a_max > 0.0) {
            Eigen::VectorXd grad = zero;
            if (grads && acc > 0.0) {
                grad.head(n) = s.xdd(k) / acc * basis.Wdd.row(k).transpose();
                grad.tail(n) = s.ydd(k) / acc * basis.Wdd.row(k).transpose();
            }
            push(acc - scene.a_max, grad);
        }
        if (s.y(k) - scene.y_ub > 0.0) {
            Eigen::VectorXd grad = zero;
            if (grads) grad.tail(n) = basis.W.row(k).transpose();
            push(s.y(k) - scene.y_ub, grad);
        }
        if (scene.y_lb - s.y(k) > 0.0) {
            Eigen::VectorXd grad = zero;
            if (grads) grad.tail(n) = -basis.W.row(k).transpose();
            push(scene.y_lb - s.y(k), grad);
        }
    }
}

}  // namespace

double planner_loss(const TrajCoeffs& xi, const Scene& scene, const BasisSet& basis) {
    std::vector<double> h;
    hinge_terms(xi, scene, basis, h, nullptr);
    double sum2 = 0.0;
    for (double v : h) sum2 += v * v;
    return std::sqrt(sum2);
}

Eigen::VectorXd planner_loss_grad_xi(const TrajCoeffs& xi, const Scene& scene,
                                     const BasisSet& basis) {
    std::vector<double> h;
    std::vector<Eigen::VectorXd> grads;
    hinge_terms(xi, scene, basis, h, &grads);
    const int n = basis.n_coef();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(2 * n);
    double sum2 = 0.0;
    for (double v : h) sum2 += v * v;
    const double norm = std::sqrt(sum2);
    if (norm <= 0.0) return g;
    for (std::size_t i = 0; i < h.size(); ++i) g += h[i] * grads[i];
    return g / norm;
}

PipelineJacobian pipeline_jacobian(const BehavioralInput& p, const Scene& scene,
                                   const BasisSet& basis, const SetpointWeights& w,
                                   const ProjectionParams& params,
                                   const GradParams& gp) {
    const InputLayout lay = layout_of(p);
    const UnrollResult r = unroll_pipeline(p, scene, basis, w, params,
                                           gp.unroll_iters, gp.kink_eps, true);
    PipelineJacobian jac;
    jac.unroll_iters = gp.unroll_iters;
    jac.kink = r.kink;
    jac.d_xi_d_p = r.d_xi.leftCols(lay.n_p);
    if (lay.n_term > 0) jac.d_xi_d_term = r.d_xi.middleCols(lay.n_p, lay.n_term);
    if (lay.n_partial > 0) {
        jac.d_xi_d_partial = r.d_xi.rightCols(lay.n_partial);
    }
    return jac;
}

LossReport loss_gradients(const BehavioralInput& p, const Scene& scene,
                          const BasisSet& basis, const Eigen::Vector2d& goal,
                          const SetpointWeights& w, const ProjectionParams& params,
                          const GradParams& gp, const LossWeights& lw) {
    const InputLayout lay = layout_of(p);
    const UnrollResult r = unroll_pipeline(p, scene, basis, w, params,
                                           gp.unroll_iters, gp.kink_eps, true);
    LossReport rep;
    rep.kink = r.kink;
    rep.goal_loss = goal_loss(r.xi_proj, basis, goal);
    rep.planner_loss = planner_loss(r.xi_proj, scene, basis);
    const Eigen::VectorXd g_xi =
        lw.w_goal * goal_loss_grad_xi(r.xi_proj, basis, goal) +
        lw.w_planner * planner_loss_grad_xi(r.xi_proj, scene, basis);
    const Eigen::VectorXd full = r.d_xi.transpose() * g_xi;
    rep.grad_p = full.head(2);
    if (lay.n_term > 0) rep.grad_term = full.segment(lay.n_p, lay.n_term);
    if (lay.n_partial > 0) rep.grad_partial = full.tail(lay.n_partial);
    return rep;
}

}  // namespace fplan
