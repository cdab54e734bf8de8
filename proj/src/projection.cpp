#include "fplan/projection.hpp"

#include <cmath>

#include "fplan/setpoint_qp.hpp"

namespace fplan {

StackedConstraints stack_constraints(const Scene& scene, const BasisSet& basis) {
    scene.validate();
    StackedConstraints sc;
    sc.selected = select_obstacles(scene);
    sc.n_obs = static_cast<int>(sc.selected.size());
    sc.m = basis.m;
    sc.n = basis.n_coef();
    const int m = sc.m;
    const int n = sc.n;
    const int no = sc.n_obs;

    sc.Fo.resize(no * m, n);
    sc.xo.resize(no * m);
    sc.yo.resize(no * m);
    for (int j = 0; j < no; ++j) {
        const auto& obs = scene.obstacles[sc.selected[j]];
        if (obs.xs.size() != m || obs.ys.size() != m) {
            throw DimensionMismatch("obstacle prediction not aligned with basis grid");
        }
        sc.Fo.block(j * m, 0, m, n) = basis.W;
        sc.xo.segment(j * m, m) = obs.xs;
        sc.yo.segment(j * m, m) = obs.ys;
    }

    const int ra = sc.rows_axis();
    sc.Ft = Eigen::MatrixXd::Zero(2 * ra, 2 * n);
    sc.Ft.block(0, 0, no * m, n) = sc.Fo;
    sc.Ft.block(no * m, 0, m, n) = basis.Wd;
    sc.Ft.block(no * m + m, 0, m, n) = basis.Wdd;
    sc.Ft.block(ra, n, no * m, n) = sc.Fo;
    sc.Ft.block(ra + no * m, n, m, n) = basis.Wd;
    sc.Ft.block(ra + no * m + m, n, m, n) = basis.Wdd;

    sc.G = Eigen::MatrixXd::Zero(2 * m, 2 * n);
    sc.G.block(0, n, m, n) = basis.W;
    sc.G.block(m, n, m, n) = -basis.W;
    sc.y_lane.resize(2 * m);
    sc.y_lane.head(m).setConstant(scene.y_ub);
    sc.y_lane.tail(m).setConstant(-scene.y_lb);

    sc.F.resize(2 * ra + 2 * m, 2 * n);
    sc.F.topRows(2 * ra) = sc.Ft;
    sc.F.bottomRows(2 * m) = sc.G;
    return sc;
}

KktFactor build_kkt_factor(const StackedConstraints& sc, const Eigen::MatrixXd& A,
                           double rho) {
    const int nx = 2 * sc.n;
    const int ne = static_cast<int>(A.rows());
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nx + ne, nx + ne);
    M.topLeftCorner(nx, nx) =
        Eigen::MatrixXd::Identity(nx, nx) + rho * sc.F.transpose() * sc.F;
    M.topRightCorner(nx, ne) = A.transpose();
    M.bottomLeftCorner(ne, nx) = A;

    Eigen::FullPivLU<Eigen::MatrixXd> check(M);
    if (!check.isInvertible()) {
        throw SingularKkt("projection KKT matrix is singular");
    }
    KktFactor kkt;
    kkt.lu.compute(M);
    kkt.rho = rho;
    kkt.nx = nx;
    kkt.neq = ne;
    return kkt;
}

namespace {

// Polar closed forms per constraint family. atan2(0, 0) maps to 0.
inline double safe_atan2(double y, double x) {
    if (x == 0.0 && y == 0.0) return 0.0;
    return std::atan2(y, x);
}

}  // namespace

void update_alpha_d(const TrajSamples& samples, const Scene& scene,
                    const StackedConstraints& sc, const ProjectionParams& params,
                    ProjectionState& st) {
    const int m = sc.m;
    const double a = scene.ell_a, b = scene.ell_b;
    for (int j = 0; j < sc.n_obs; ++j) {
        for (int k = 0; k < m; ++k) {
            const int idx = j * m + k;
            const double dx = samples.x(k) - sc.xo(idx);
            const double dy = samples.y(k) - sc.yo(idx);
            const double alpha = safe_atan2(dy / b, dx / a);
            const double c = std::cos(alpha), s = std::sin(alpha);
            const double dhat =
                (a * dx * c + b * dy * s) / (a * a * c * c + b * b * s * s);
            st.alpha_o(idx) = alpha;
            st.d_o(idx) = std::clamp(dhat, 1.0, params.d_big);
        }
    }
    for (int k = 0; k < m; ++k) {
        st.alpha_v(k) = safe_atan2(samples.yd(k), samples.xd(k));
        st.d_v(k) = std::clamp(std::hypot(samples.xd(k), samples.yd(k)),
                               scene.v_min, scene.v_max);
        st.alpha_a(k) = safe_atan2(samples.ydd(k), samples.xdd(k));
        st.d_a(k) = std::clamp(std::hypot(samples.xdd(k), samples.ydd(k)), 0.0,
                               scene.a_max);
    }
}

void update_slack(const TrajCoeffs& xi, const StackedConstraints& sc,
                  ProjectionState& st) {
    st.s = (sc.y_lane - sc.G * xi.stacked()).cwiseMax(0.0);
}

void update_lambda(const TrajCoeffs& xi, const StackedConstraints& sc,
                   const ProjectionParams& params, ProjectionState& st) {
    st.lambda += params.rho * (sc.F.transpose() * (sc.F * xi.stacked() - st.e));
}

void assemble_e(const Scene& scene, const StackedConstraints& sc,
                ProjectionState& st) {
    const int m = sc.m;
    const int no = sc.n_obs;
    const int ra = sc.rows_axis();
    const double a = scene.ell_a, b = scene.ell_b;
    Eigen::VectorXd e(sc.rows_total());
    for (int idx = 0; idx < no * m; ++idx) {
        e(idx) = sc.xo(idx) + a * st.d_o(idx) * std::cos(st.alpha_o(idx));
        e(ra + idx) = sc.yo(idx) + b * st.d_o(idx) * std::sin(st.alpha_o(idx));
    }
    for (int k = 0; k < m; ++k) {
        e(no * m + k) = st.d_v(k) * std::cos(st.alpha_v(k));
        e(no * m + m + k) = st.d_a(k) * std::cos(st.alpha_a(k));
        e(ra + no * m + k) = st.d_v(k) * std::sin(st.alpha_v(k));
        e(ra + no * m + m + k) = st.d_a(k) * std::sin(st.alpha_a(k));
    }
    e.tail(2 * m) = sc.y_lane - st.s;
    st.e = std::move(e);
}

ProjectionState init_state(const TrajCoeffs& xi0, const Scene& scene,
                           const StackedConstraints& sc, const BasisSet& basis,
                           const ProjectionParams& params) {
    ProjectionState st;
    const int m = sc.m;
    st.alpha_o.resize(sc.n_obs * m);
    st.d_o.resize(sc.n_obs * m);
    st.alpha_v.resize(m);
    st.d_v.resize(m);
    st.alpha_a.resize(m);
    st.d_a.resize(m);
    st.lambda = Eigen::VectorXd::Zero(2 * sc.n);
    const TrajSamples samples = eval_traj(basis, xi0);
    update_alpha_d(samples, scene, sc, params, st);
    update_slack(xi0, sc, st);
    assemble_e(scene, sc, st);
    return st;
}

TrajCoeffs qp_step(const TrajCoeffs& xi_star, const StackedConstraints& sc,
                   const ProjectionState& st, const KktFactor& kkt,
                   const Eigen::VectorXd& b) {
    // Stationarity of 1/2||xi - xi*||^2 + lambda'xi + rho/2||F xi - e||^2,
    // the relaxation whose multiplier ascent is the h1 update. The sign in
    // front of lambda is forced by that pairing: with +lambda in this RHS the
    // multiplier feeds violations back positively and the loop diverges.
    Eigen::VectorXd rhs(kkt.nx + kkt.neq);
    rhs.head(kkt.nx) =
        xi_star.stacked() - st.lambda + kkt.rho * (sc.F.transpose() * st.e);
    rhs.tail(kkt.neq) = b;
    const Eigen::VectorXd sol = kkt.lu.solve(rhs);
    return TrajCoeffs::from_stacked(sol.head(kkt.nx));
}

Violations evaluate_violations(const TrajCoeffs& xi, const Scene& scene,
                               const BasisSet& basis) {
    const TrajSamples s = eval_traj(basis, xi);
    Violations v;
    const auto sel = select_obstacles(scene);
    for (int j : sel) {
        const auto& obs = scene.obstacles[j];
        for (int k = 0; k < basis.m; ++k) {
            const double px = (s.x(k) - obs.xs(k)) / scene.ell_a;
            const double py = (s.y(k) - obs.ys(k)) / scene.ell_b;
            const double dn = std::hypot(px, py);
            v.collision = std::max(v.collision, 1.0 - dn);
        }
    }
    for (int k = 0; k < basis.m; ++k) {
        v.speed = std::max(v.speed, std::hypot(s.xd(k), s.yd(k)) - scene.v_max);
        v.accel = std::max(v.accel, std::hypot(s.xdd(k), s.ydd(k)) - scene.a_max);
        v.lane = std::max({v.lane, s.y(k) - scene.y_ub, scene.y_lb - s.y(k)});
    }
    v.collision = std::max(0.0, v.collision);
    v.speed = std::max(0.0, v.speed);
    v.accel = std::max(0.0, v.accel);
    v.lane = std::max(0.0, v.lane);
    return v;
}

namespace {

ProjectionResult run_projection(const TrajCoeffs& xi_star, const Scene& scene,
                                const BasisSet& basis, const StackedConstraints& sc,
                                const KktFactor& kkt, const Eigen::MatrixXd& A,
                                const Eigen::VectorXd& b,
                                const ProjectionParams& params) {
    ProjectionState st = init_state(xi_star, scene, sc, basis, params);
    TrajCoeffs xi = xi_star;
    ProjectionResult res;
    res.max_eq_residual = (A * xi.stacked() - b).cwiseAbs().maxCoeff();

    // params.rho seeds the penalty; a stalled residual escalates it (with a
    // fresh factorization) up to three times. The multiplier's fixed point
    // does not depend on rho, so lambda carries over. If the residual still
    // stalls, a small deterministic null-space jitter knocks the iterate off
    // the wedge without touching the boundary rows.
    ProjectionParams run = params;
    KktFactor escalated;
    const KktFactor* active = &kkt;
    int escalations = 0;
    Eigen::MatrixXd null_proj;  // projector onto null(A), built on demand
    std::uint64_t jitter_word = 0x9e3779b97f4a7c15ULL;

    for (int it = 0; it < params.max_iters; ++it) {
        // One sweep of (e, lambda) = h(xi, lambda) followed by the QP step:
        // fresh polar targets and slack, their stacked e, then the multiplier
        // measured against that e.
        const TrajSamples samples = eval_traj(basis, xi);
        update_alpha_d(samples, scene, sc, run, st);
        update_slack(xi, sc, st);
        assemble_e(scene, sc, st);
        update_lambda(xi, sc, run, st);
        const double r = (sc.F * xi.stacked() - st.e).norm();
        st.residual_history.push_back(r);
        res.final_residual = r;
        res.iters = it + 1;
        if (r <= params.tol) {
            res.converged = true;
            break;
        }
        bool jitter = false;
        if (it >= 10 && it % 5 == 0 && r > 0.7 * st.residual_history[it - 5]) {
            if (escalations < 4) {
                run.rho *= 3.0;
                escalated = build_kkt_factor(sc, A, run.rho);
                active = &escalated;
                ++escalations;
            } else {
                jitter = true;
            }
        }
        xi = qp_step(xi_star, sc, st, *active, b);
        if (jitter) {
            // Perturb the iterate the next sweep derives its targets from.
            if (null_proj.size() == 0) {
                const Eigen::MatrixXd AAt = A * A.transpose();
                null_proj = Eigen::MatrixXd::Identity(kkt.nx, kkt.nx) -
                            A.transpose() * AAt.ldlt().solve(A);
            }
            Eigen::VectorXd noise(kkt.nx);
            for (int i = 0; i < kkt.nx; ++i) {
                jitter_word ^= jitter_word << 13;
                jitter_word ^= jitter_word >> 7;
                jitter_word ^= jitter_word << 17;
                noise(i) =
                    static_cast<double>(jitter_word >> 11) / 9007199254740992.0 - 0.5;
            }
            xi = TrajCoeffs::from_stacked(xi.stacked() + 0.1 * (null_proj * noise));
        }
        res.max_eq_residual = std::max(
            res.max_eq_residual, (A * xi.stacked() - b).cwiseAbs().maxCoeff());
    }
    if (!res.converged) {
        // Measure the feasibility gap of the returned iterate.
        const TrajSamples samples = eval_traj(basis, xi);
        update_alpha_d(samples, scene, sc, run, st);
        update_slack(xi, sc, st);
        assemble_e(scene, sc, st);
        const double r = (sc.F * xi.stacked() - st.e).norm();
        st.residual_history.push_back(r);
        res.final_residual = r;
    }
    res.xi_proj = xi;
    res.max_violation = evaluate_violations(xi, scene, basis);
    res.residual_history = std::move(st.residual_history);
    return res;
}

}  // namespace

ProjectionResult project(const TrajCoeffs& xi0, const Scene& scene,
                         const BasisSet& basis, const ProjectionParams& params) {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    boundary_rows(basis, scene.ego0, A, b);
    return project(xi0, scene, basis, params, A, b);
}

ProjectionResult project(const TrajCoeffs& xi0, const Scene& scene,
                         const BasisSet& basis, const ProjectionParams& params,
                         const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    const StackedConstraints sc = stack_constraints(scene, basis);
    const KktFactor kkt = build_kkt_factor(sc, A, params.rho);
    return run_projection(xi0, scene, basis, sc, kkt, A, b, params);
}

std::vector<ProjectionResult> project_batch(const std::vector<TrajCoeffs>& xis,
                                            const Scene& scene, const BasisSet& basis,
                                            const ProjectionParams& params) {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    boundary_rows(basis, scene.ego0, A, b);
    const StackedConstraints sc = stack_constraints(scene, basis);
    const KktFactor kkt = build_kkt_factor(sc, A, params.rho);
    std::vector<ProjectionResult> out;
    out.reserve(xis.size());
    for (const auto& xi : xis) {
        out.push_back(run_projection(xi, scene, basis, sc, kkt, A, b, params));
    }
    return out;
}

}  // namespace fplan
