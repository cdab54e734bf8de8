#include "fplan/basis.hpp"

#include <cmath>

namespace fplan {

namespace {

// Bernstein values b_{i,n}(u) for u in [0, 1], computed by the stable
// de Casteljau-style recurrence.
Eigen::RowVectorXd bernstein_row(int n, double u) {
    Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(n + 1);
    b(0) = 1.0;
    const double v = 1.0 - u;
    for (int j = 1; j <= n; ++j) {
        double saved = 0.0;
        for (int i = 0; i < j; ++i) {
            const double tmp = b(i);
            b(i) = saved + v * tmp;
            saved = u * tmp;
        }
        b(j) = saved;
    }
    return b;
}

// Derivative rows from lower-degree Bernstein rows; r is the derivative
// order, scale = (1/T)^r accounts for the [0, T] domain.
Eigen::RowVectorXd derivative_row(int n, double u, int r, double T) {
    if (r == 0) return bernstein_row(n, u);
    if (n < r) return Eigen::RowVectorXd::Zero(n + 1);
    const Eigen::RowVectorXd low = bernstein_row(n - r, u);
    Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(n + 1);
    // Finite-difference pattern of binomial coefficients: r-th derivative of
    // b_{i,n} is fact * sum_j (-1)^j C(r,j) b_{i-r+j, n-r}.
    double fact = 1.0;
    for (int k = 0; k < r; ++k) fact *= static_cast<double>(n - k) / T;
    std::vector<double> binom(r + 1, 1.0);
    for (int j = 1; j <= r; ++j) binom[j] = binom[j - 1] * (r - j + 1) / j;
    for (int i = 0; i <= n; ++i) {
        double acc = 0.0;
        for (int j = 0; j <= r; ++j) {
            const int idx = i - r + j;
            if (idx < 0 || idx > n - r) continue;
            const double sign = (j % 2 == 0) ? 1.0 : -1.0;
            acc += sign * binom[j] * low(idx);
        }
        out(i) = fact * acc;
    }
    return out;
}

}  // namespace

BasisSet make_basis(int degree, double horizon, int m) {
    if (degree < 3) throw InvalidBasisConfig("degree must be >= 3");
    if (m < degree + 1) throw InvalidBasisConfig("need at least degree+1 samples");
    if (!(horizon > 0.0)) throw InvalidBasisConfig("horizon must be positive");

    BasisSet b;
    b.degree = degree;
    b.horizon = horizon;
    b.m = m;
    b.dt = horizon / (m - 1);
    b.times.resize(m);
    const int n = degree + 1;
    b.W.resize(m, n);
    b.Wd.resize(m, n);
    b.Wdd.resize(m, n);
    b.Wddd.resize(m, n);
    for (int k = 0; k < m; ++k) {
        const double t = k * b.dt;
        const double u = t / horizon;
        b.times(k) = t;
        b.W.row(k) = bernstein_row(degree, u);
        b.Wd.row(k) = derivative_row(degree, u, 1, horizon);
        b.Wdd.row(k) = derivative_row(degree, u, 2, horizon);
        b.Wddd.row(k) = derivative_row(degree, u, 3, horizon);
    }
    return b;
}

Eigen::VectorXd TrajCoeffs::stacked() const {
    Eigen::VectorXd xi(cx.size() + cy.size());
    xi << cx, cy;
    return xi;
}

TrajCoeffs TrajCoeffs::from_stacked(const Eigen::VectorXd& xi) {
    const Eigen::Index n = xi.size() / 2;
    TrajCoeffs c;
    c.cx = xi.head(n);
    c.cy = xi.tail(n);
    return c;
}

TrajSamples eval_traj(const BasisSet& basis, const TrajCoeffs& xi) {
    if (xi.cx.size() != basis.n_coef() || xi.cy.size() != basis.n_coef()) {
        throw DimensionMismatch("coefficient length does not match basis columns");
    }
    TrajSamples s;
    s.x = basis.W * xi.cx;
    s.y = basis.W * xi.cy;
    s.xd = basis.Wd * xi.cx;
    s.yd = basis.Wd * xi.cy;
    s.xdd = basis.Wdd * xi.cx;
    s.ydd = basis.Wdd * xi.cy;
    return s;
}

void basis_rows_at(const BasisSet& basis, double t, Eigen::RowVectorXd& w,
                   Eigen::RowVectorXd& wd, Eigen::RowVectorXd& wdd) {
    const double u = std::clamp(t / basis.horizon, 0.0, 1.0);
    w = bernstein_row(basis.degree, u);
    wd = derivative_row(basis.degree, u, 1, basis.horizon);
    wdd = derivative_row(basis.degree, u, 2, basis.horizon);
}

TrajPoint eval_point(const BasisSet& basis, const TrajCoeffs& xi, double t) {
    Eigen::RowVectorXd w, wd, wdd;
    basis_rows_at(basis, t, w, wd, wdd);
    TrajPoint p;
    p.pos = {w.dot(xi.cx), w.dot(xi.cy)};
    p.vel = {wd.dot(xi.cx), wd.dot(xi.cy)};
    p.acc = {wdd.dot(xi.cx), wdd.dot(xi.cy)};
    return p;
}

}  // namespace fplan
