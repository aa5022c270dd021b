#pragma once

#include <cmath>
#include <functional>

#include "parreg/grid.hpp"
#include "parreg/scale.hpp"

namespace parreg {

namespace detail {

/// Cell quadrature: exact weight mass times the 3-point Gauss average of the
/// sampled integrand. Exact whenever the integrand is constant on the cell, and
/// for kappa = 0 exact up to integrands of degree five.
template <class PointNorm>
double weighted_pow_integral(const TimeGrid& g, NodeRange r, double p, double kappa,
                             PointNorm&& point_norm) {
    const auto w = TimeGrid::gauss_weights();
    double acc = 0.0;
    for (std::size_t j = r.lo; j < r.hi; ++j) {
        const auto pts = g.gauss_points(j);
        double avg = 0.0;
        for (int k = 0; k < 3; ++k) avg += w[k] * std::pow(point_norm(j, pts[k]), p);
        acc += g.weight_mass(j, kappa) * avg;
    }
    return acc;
}

inline void check_lp(double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw ParameterError("integrability p must be >= 1");
}

inline void check_mr_weight(double p, double kappa) {
    check_lp(p);
    if (!(kappa >= 0.0) || !(kappa < p - 1.0))
        throw ParameterError("time weight exponent must lie in [0, p-1)");
}

inline NodeRange resolve(const GridFunction& u, const NodeRange* r) {
    NodeRange rr = r ? *r : u.grid().full();
    if (rr.lo >= rr.hi || rr.hi > u.grid().cells())
        throw InvalidInputError("bad node range");
    return rr;
}

/// Interpolated value of u at time t inside cell j.
inline Eigen::VectorXd at(const GridFunction& u, std::size_t j, double t) {
    const double a = u.grid().node(j), b = u.grid().node(j + 1);
    const double s = (t - a) / (b - a);
    return (1.0 - s) * u.value(j) + s * u.value(j + 1);
}

} // namespace detail

/// Generic weighted Bochner norm || t -> ||u(t)||_level ||_{L^q(t^mu dt)} on a
/// node range. mu only needs to exceed -1 (used for budget-side and L^1 norms).
inline double time_lq_norm(const GridFunction& u, double q, double mu, SpaceLevel level,
                           const HilbertScale& scale, const NodeRange* range = nullptr) {
    detail::check_lp(q);
    const NodeRange r = detail::resolve(u, range);
    const double acc = detail::weighted_pow_integral(
        u.grid(), r, q, mu,
        [&](std::size_t j, double t) { return scale.level_norm(detail::at(u, j, t), level); });
    return std::pow(acc, 1.0 / q);
}

/// Same, for an arbitrary evaluator (sampled at interior Gauss points only).
inline double time_lq_norm_fn(const std::function<Eigen::VectorXd(double)>& f, double q,
                              double mu, SpaceLevel level, const HilbertScale& scale,
                              const TimeGrid& grid, const NodeRange* range = nullptr) {
    detail::check_lp(q);
    NodeRange r = range ? *range : grid.full();
    const double acc = detail::weighted_pow_integral(
        grid, r, q, mu, [&](std::size_t, double t) { return scale.level_norm(f(t), level); });
    return std::pow(acc, 1.0 / q);
}

/// || u ||_{L^p(0,T, t^kappa dt; X_level)} with the maximal-regularity weight
/// restriction kappa in [0, p-1).
inline double weighted_lp_norm(const GridFunction& u, double p, double kappa, SpaceLevel level,
                               const HilbertScale& scale, const NodeRange* range = nullptr) {
    detail::check_mr_weight(p, kappa);
    return time_lq_norm(u, p, kappa, level, scale, range);
}

/// Weighted L^p norm of the backward-difference derivative (constant per cell,
/// so the cell quadrature is exact).
inline double derivative_lp_norm(const GridFunction& u, double p, double kappa, SpaceLevel level,
                                 const HilbertScale& scale, const NodeRange* range = nullptr) {
    detail::check_mr_weight(p, kappa);
    const NodeRange r = detail::resolve(u, range);
    double acc = 0.0;
    for (std::size_t j = r.lo; j < r.hi; ++j) {
        const double nv = scale.level_norm(u.cell_derivative(j), level);
        acc += u.grid().weight_mass(j, kappa) * std::pow(nv, p);
    }
    return std::pow(acc, 1.0 / p);
}

/// Sobolev norm: max of the function and derivative weighted L^p norms.
inline double w1p_norm(const GridFunction& u, double p, double kappa, SpaceLevel level,
                       const HilbertScale& scale, const NodeRange* range = nullptr) {
    return std::max(weighted_lp_norm(u, p, kappa, level, scale, range),
                    derivative_lp_norm(u, p, kappa, level, scale, range));
}

/// Maximal-regularity norm: max(L^p(w_kappa; X_1), W^{1,p}(w_kappa; X_0)).
inline double mr_norm(const GridFunction& u, double p, double kappa, const HilbertScale& scale,
                      const NodeRange* range = nullptr) {
    return std::max(weighted_lp_norm(u, p, kappa, SpaceLevel::power(1.0), scale, range),
                    w1p_norm(u, p, kappa, SpaceLevel::power(0.0), scale, range));
}

/// max over grid nodes of t^weight_exp ||u(t)||_level; the node t = 0
/// participates exactly when weight_exp == 0.
inline double trace_sup_norm(const GridFunction& u, double weight_exp, SpaceLevel level,
                             const HilbertScale& scale, const NodeRange* range = nullptr) {
    if (!(weight_exp >= 0.0)) throw ParameterError("trace weight exponent must be >= 0");
    const NodeRange r = detail::resolve(u, range);
    std::vector<std::size_t> idx;
    idx.reserve(r.hi - r.lo + 1);
    for (std::size_t j = r.lo; j <= r.hi; ++j) {
        if (u.grid().node(j) == 0.0 && weight_exp > 0.0) continue;
        idx.push_back(j);
    }
    Eigen::MatrixXd X(static_cast<Eigen::Index>(u.dim()), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c)
        X.col(static_cast<Eigen::Index>(c)) = u.value(idx[c]);
    const Eigen::VectorXd ns = scale.level_norms(X, level);
    double s = 0.0;
    for (std::size_t c = 0; c < idx.size(); ++c) {
        const double t = u.grid().node(idx[c]);
        const double w = weight_exp == 0.0 ? 1.0 : std::pow(t, weight_exp);
        s = std::max(s, w * ns[static_cast<Eigen::Index>(c)]);
    }
    return s;
}

/// Intersection norm of the intermediate rung: max over the L^r(w_nu; X_{1+gamma})
/// norm of u and the W^{1,r}(w_nu; X_gamma) norm.
inline double zr_norm(const GridFunction& u, double r, double nu, double gamma,
                      const HilbertScale& scale, const NodeRange* range = nullptr) {
    return std::max(
        weighted_lp_norm(u, r, nu, SpaceLevel::power(1.0 + gamma), scale, range),
        w1p_norm(u, r, nu, SpaceLevel::power(gamma), scale, range));
}

/// Unweighted solution norm for the L^1-trace theory:
/// max(L^p(X_1), sup_t || u(t) ||_{(X_0,X_1)_{1-1/p,p}}).
inline double ep_norm(const GridFunction& u, double p, const HilbertScale& scale,
                      const NodeRange* range = nullptr) {
    const SpaceLevel tr = SpaceLevel::interp(1.0 - 1.0 / p, p);
    return std::max(weighted_lp_norm(u, p, 0.0, SpaceLevel::power(1.0), scale, range),
                    trace_sup_norm(u, 0.0, tr, scale, range));
}

/// Pre-infimum sum-space bound: the sum of the declared component norms. Any
/// concrete decomposition prices the sum space from above.
struct SumComponent {
    const GridFunction* u;
    double p;
    double nu;
    SpaceLevel level;
};

inline double sum_norm_upper(const std::vector<SumComponent>& comps, const HilbertScale& scale,
                             const NodeRange* range = nullptr) {
    double acc = 0.0;
    for (const auto& c : comps) acc += time_lq_norm(*c.u, c.p, c.nu, c.level, scale, range);
    return acc;
}

/// L^p(w_kappa; X_level) distance of two grid functions on a shared grid.
inline double lp_distance(const GridFunction& u, const GridFunction& v, double p, double kappa,
                          SpaceLevel level, const HilbertScale& scale,
                          const NodeRange* range = nullptr) {
    u.require_same_grid(v);
    GridFunction d = u;
    d -= v;
    return time_lq_norm(d, p, kappa, level, scale, range);
}

} // namespace parreg
