#include "fplan/setpoint_qp.hpp"

#include <cmath>

namespace fplan {

void boundary_rows(const BasisSet& basis, const EgoBoundary& b0, Eigen::MatrixXd& A,
                   Eigen::VectorXd& b) {
    const int n = basis.n_coef();
    A = Eigen::MatrixXd::Zero(6, 2 * n);
    b.resize(6);
    const Eigen::RowVectorXd w0 = basis.W.row(0);
    const Eigen::RowVectorXd wd0 = basis.Wd.row(0);
    const Eigen::RowVectorXd wdd0 = basis.Wdd.row(0);
    A.block(0, 0, 1, n) = w0;
    A.block(1, 0, 1, n) = wd0;
    A.block(2, 0, 1, n) = wdd0;
    A.block(3, n, 1, n) = w0;
    A.block(4, n, 1, n) = wd0;
    A.block(5, n, 1, n) = wdd0;
    b << b0.pos.x(), b0.vel.x(), b0.acc.x(), b0.pos.y(), b0.vel.y(), b0.acc.y();
}

void equality_rows(const BasisSet& basis, const BehavioralInput& p,
                   const EgoBoundary& b0, Eigen::MatrixXd& A, Eigen::VectorXd& b) {
    const int n = basis.n_coef();
    Eigen::MatrixXd A0;
    Eigen::VectorXd b0rows;
    boundary_rows(basis, b0, A0, b0rows);

    int extra = 0;
    if (p.term) extra += p.term->acc ? 6 : 4;
    if (p.partial) extra += static_cast<int>(p.partial->indices.size());

    A = Eigen::MatrixXd::Zero(6 + extra, 2 * n);
    b.resize(6 + extra);
    A.topRows(6) = A0;
    b.head(6) = b0rows;

    int r = 6;
    if (p.term) {
        const Eigen::RowVectorXd wT = basis.W.row(basis.m - 1);
        const Eigen::RowVectorXd wdT = basis.Wd.row(basis.m - 1);
        A.block(r, 0, 1, n) = wT;
        b(r++) = p.term->pos.x();
        A.block(r, 0, 1, n) = wdT;
        b(r++) = p.term->vel.x();
        A.block(r, n, 1, n) = wT;
        b(r++) = p.term->pos.y();
        A.block(r, n, 1, n) = wdT;
        b(r++) = p.term->vel.y();
        if (p.term->acc) {
            const Eigen::RowVectorXd wddT = basis.Wdd.row(basis.m - 1);
            A.block(r, 0, 1, n) = wddT;
            b(r++) = p.term->acc->x();
            A.block(r, n, 1, n) = wddT;
            b(r++) = p.term->acc->y();
        }
    }
    if (p.partial) {
        const auto& ps = *p.partial;
        if (ps.values.size() != static_cast<Eigen::Index>(ps.indices.size())) {
            throw DimensionMismatch("partial solution indices/values length mismatch");
        }
        for (std::size_t k = 0; k < ps.indices.size(); ++k) {
            const int idx = ps.indices[k];
            if (idx < 0 || idx >= 2 * n) {
                throw DimensionMismatch("partial solution index out of range");
            }
            A(r, idx) = 1.0;
            b(r++) = ps.values(static_cast<Eigen::Index>(k));
        }
    }
}

QpProblem build_qp(const BasisSet& basis, const SetpointWeights& w,
                   const BehavioralInput& p, const EgoBoundary& b0) {
    const int n = basis.n_coef();
    const int m = basis.m;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);

    // x axis: smoothness on xdd plus proportional speed tracking
    // (xdd + kp*(xd - v_d))^2 expands around B = Wdd + kp*Wd.
    const Eigen::MatrixXd B = basis.Wdd + w.kappa_p * basis.Wd;
    Eigen::MatrixXd Qx = 2.0 * (w.w_s * basis.Wdd.transpose() * basis.Wdd +
                                w.w_v * B.transpose() * B);
    Eigen::VectorXd qx = -2.0 * w.w_v * w.kappa_p * p.v_d * (B.transpose() * ones);

    // y axis: smoothness plus PD lateral tracking around
    // C = Wdd + kp*W + kv*Wd, target kp*y_d.
    const Eigen::MatrixXd C = basis.Wdd + w.kappa_p * basis.W + w.kappa_v * basis.Wd;
    Eigen::MatrixXd Qy = 2.0 * (w.w_s * basis.Wdd.transpose() * basis.Wdd +
                                w.w_l * C.transpose() * C);
    Eigen::VectorXd qy = -2.0 * w.w_l * w.kappa_p * p.y_d * (C.transpose() * ones);

    if (w.w_jerk > 0.0) {
        const Eigen::MatrixXd J = basis.Wddd.transpose() * basis.Wddd;
        Qx += 2.0 * w.w_jerk * J;
        Qy += 2.0 * w.w_jerk * J;
    }

    QpProblem qp;
    qp.Q = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    qp.Q.topLeftCorner(n, n) = Qx;
    qp.Q.bottomRightCorner(n, n) = Qy;
    qp.q.resize(2 * n);
    qp.q << qx, qy;
    qp.cost_offset = w.w_v * m * (w.kappa_p * p.v_d) * (w.kappa_p * p.v_d) +
                     w.w_l * m * (w.kappa_p * p.y_d) * (w.kappa_p * p.y_d);
    equality_rows(basis, p, b0, qp.A, qp.b);
    return qp;
}

QpSolution solve_eq_qp(const QpProblem& qp) {
    const Eigen::Index nx = qp.Q.rows();
    const Eigen::Index ne = qp.A.rows();
    if (qp.Q.cols() != nx || qp.A.cols() != nx || qp.q.size() != nx ||
        qp.b.size() != ne) {
        throw DimensionMismatch("inconsistent QP dimensions");
    }
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nx + ne, nx + ne);
    K.topLeftCorner(nx, nx) = qp.Q;
    K.topRightCorner(nx, ne) = qp.A.transpose();
    K.bottomLeftCorner(ne, nx) = qp.A;
    Eigen::VectorXd rhs(nx + ne);
    rhs << -qp.q, qp.b;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (!lu.isInvertible()) {
        throw SingularKkt("KKT matrix is singular (rank-deficient constraints or "
                          "indefinite reduced Hessian)");
    }
    const Eigen::VectorXd sol = lu.solve(rhs);
    QpSolution out;
    out.xi = TrajCoeffs::from_stacked(sol.head(nx));
    out.nu = sol.tail(ne);
    return out;
}

double setpoint_objective(const BasisSet& basis, const SetpointWeights& w,
                          const BehavioralInput& p, const TrajCoeffs& xi) {
    const TrajSamples s = eval_traj(basis, xi);
    double cost = 0.0;
    for (int k = 0; k < basis.m; ++k) {
        const double cs = s.xdd(k) * s.xdd(k) + s.ydd(k) * s.ydd(k);
        const double cl_term = s.ydd(k) + w.kappa_p * (s.y(k) - p.y_d) + w.kappa_v * s.yd(k);
        const double cv_term = s.xdd(k) - w.kappa_p * (p.v_d - s.xd(k));
        cost += w.w_s * cs + w.w_l * cl_term * cl_term + w.w_v * cv_term * cv_term;
    }
    if (w.w_jerk > 0.0) {
        const Eigen::VectorXd xddd = basis.Wddd * xi.cx;
        const Eigen::VectorXd yddd = basis.Wddd * xi.cy;
        cost += w.w_jerk * (xddd.squaredNorm() + yddd.squaredNorm());
    }
    return cost;
}

double qp_objective(const QpProblem& qp, const TrajCoeffs& xi) {
    const Eigen::VectorXd v = xi.stacked();
    return 0.5 * v.dot(qp.Q * v) + qp.q.dot(v) + qp.cost_offset;
}

}  // namespace fplan
