#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "parreg/grid.hpp"
#include "parreg/operators.hpp"

namespace parreg {

/// Exact integral of the right-hand side over a cell [a, b].
using CellIntegral = std::function<Eigen::VectorXd(double a, double b)>;

namespace detail {

/// Exact int_a^b env(t) * vhat(t) dt for piecewise-linear vhat, split at any
/// interior nodes of vhat's grid; the envelope moments handle integrable
/// singularities without sampling them.
inline Eigen::VectorXd envelope_linear_integral(const Envelope& env, const GridFunction& v,
                                                double a, double b) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(v.dim()));
    const TimeGrid& g = v.grid();
    std::size_t j = g.locate(a);
    double lo = a;
    while (lo < b) {
        const double hi = std::min(b, g.node(std::min(j + 1, g.cells())));
        if (hi > lo) {
            const Eigen::VectorXd va = v.eval(lo);
            const Eigen::VectorXd vb = v.eval(hi);
            const Eigen::VectorXd slope = (vb - va) / (hi - lo);
            const double m0 = env.moment(lo, hi, 0);
            const double m1 = env.moment(lo, hi, 1);
            acc += va * m0 + slope * (m1 - lo * m0);
        }
        lo = hi;
        ++j;
    }
    return acc;
}

} // namespace detail

/// Exact int_a^b B(t) v(t) dt for a diagonal perturbation and piecewise-linear v.
inline Eigen::VectorXd perturb_cell_integral(const Perturbation& B, const GridFunction& v,
                                             double a, double b) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(v.dim()));
    for (const auto& c : B.comps) {
        const Eigen::VectorXd base = detail::envelope_linear_integral(c.b, v, a, b);
        acc += c.sign * c.factor_diag.cwiseProduct(base);
    }
    return acc;
}

/// Exact int_a^b A(t) v(t) dt for a separable family and piecewise-linear v.
inline Eigen::VectorXd family_cell_integral(const OperatorFamily& F, const GridFunction& v,
                                            double a, double b) {
    const Eigen::VectorXd base = detail::envelope_linear_integral(F.profile, v, a, b);
    if (F.diagonal) return F.diag_base.cwiseProduct(base);
    return F.mat_base * base;
}

/// Backward Euler for u' + A(t) u (+ B(t) u) = rhs on the node range, operator
/// evaluated at the right endpoint, right-hand side integrated exactly per
/// cell. Nodes outside the range stay zero. Zero data yields exactly zero.
inline GridFunction implicit_euler_solve(const OperatorFamily& A, const Perturbation* B,
                                         const CellIntegral* rhs, const Eigen::VectorXd& init,
                                         const GridPtr& grid, NodeRange r) {
    const Eigen::Index n = static_cast<Eigen::Index>(A.scale->dim());
    if (init.size() != n) throw InvalidInputError("initial value has wrong dimension");
    GridFunction u(grid, static_cast<std::size_t>(n));
    u.set(r.lo, init);
    const bool diag_path = A.diagonal;
    Eigen::VectorXd cur = init;
    for (std::size_t j = r.lo; j < r.hi; ++j) {
        const double a = grid->node(j), b = grid->node(j + 1);
        const double h = b - a;
        Eigen::VectorXd target = cur;
        if (rhs) target += (*rhs)(a, b);
        if (diag_path) {
            Eigen::VectorXd d = A.diag_at(b);
            if (B) d += B->diag_at(b);
            cur = target.array() / (1.0 + h * d.array());
        } else {
            Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n) + h * A.mat_at(b);
            if (B) M += h * Eigen::MatrixXd(B->diag_at(b).asDiagonal());
            cur = M.partialPivLu().solve(target);
        }
        u.set(j + 1, cur);
    }
    return u;
}

/// One Richardson level on top of backward Euler: solve on the grid and on its
/// midpoint refinement, combine 2 u_fine - u_coarse at the shared nodes.
/// First order becomes second for smooth data.
inline GridFunction ie_richardson_solve(const OperatorFamily& A, const Perturbation* B,
                                        const CellIntegral* rhs, const Eigen::VectorXd& init,
                                        const GridPtr& grid, NodeRange r,
                                        const GridPtr& refined_cache = nullptr) {
    GridFunction coarse = implicit_euler_solve(A, B, rhs, init, grid, r);
    GridPtr fine_grid = refined_cache ? refined_cache : share(grid->refined());
    const NodeRange fr{2 * r.lo, 2 * r.hi};
    GridFunction fine = implicit_euler_solve(A, B, rhs, init, fine_grid, fr);
    for (std::size_t j = r.lo; j <= r.hi; ++j)
        coarse.set(j, 2.0 * fine.value(2 * j) - coarse.value(j));
    return coarse;
}

/// Exponential stepper for u' + A0 u = rhs with A0 autonomous diagonal: the
/// per-mode decay factor is exact and the cell-averaged right-hand side is
/// integrated against the kernel in closed form, so per-cell masses (spikes,
/// integrable singularities) are preserved exactly.
inline GridFunction mild_solve(const OperatorFamily& A0, const CellIntegral* rhs,
                               const Eigen::VectorXd& init, const GridPtr& grid, NodeRange r) {
    if (!A0.diagonal || !A0.autonomous)
        throw InvalidInputError("mild solve needs an autonomous diagonal family");
    const Eigen::Index n = static_cast<Eigen::Index>(A0.scale->dim());
    if (init.size() != n) throw InvalidInputError("initial value has wrong dimension");
    GridFunction u(grid, static_cast<std::size_t>(n));
    u.set(r.lo, init);
    const Eigen::VectorXd d = A0.diag_at(grid->node(r.lo));
    Eigen::VectorXd cur = init;
    for (std::size_t j = r.lo; j < r.hi; ++j) {
        const double h = grid->cell_width(j);
        Eigen::VectorXd next(n);
        Eigen::VectorXd rint =
            rhs ? (*rhs)(grid->node(j), grid->node(j + 1)) : Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double x = d[i] * h;
            const double decay = std::exp(-x);
            // (1 - e^{-x})/x, stable near zero.
            const double phi = x == 0.0 ? 1.0 : -std::expm1(-x) / x;
            next[i] = decay * cur[i] + phi * rint[i];
        }
        u.set(j + 1, next);
        cur = next;
    }
    return u;
}

} // namespace parreg
