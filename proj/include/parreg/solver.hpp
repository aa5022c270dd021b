#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "parreg/admissibility.hpp"
#include "parreg/envelope.hpp"
#include "parreg/errors.hpp"
#include "parreg/grid.hpp"
#include "parreg/norms.hpp"
#include "parreg/ode.hpp"
#include "parreg/operators.hpp"
#include "parreg/sampling.hpp"
#include "parreg/scale.hpp"

namespace parreg {

// ---------------------------------------------------------------------------
// options and reports
// ---------------------------------------------------------------------------

struct BudgetConstants {
    double C0 = 1.0; ///< Lipschitz constant of the perturbation feedback loop
    double M = 1.0;  ///< solve-operator norm (forcing to trajectory)
};

struct SolverOptions {
    double tol = 1e-10;            ///< relative fixed-point stopping increment
    int max_iter = 60;
    double contraction_cap = 0.75; ///< measured ratio above this splits the interval
    int max_bisect = 8;
    double budget_safety = 2.0;    ///< multiplies measured constants before budgeting
    std::optional<double> budget_override;
    std::optional<BudgetConstants> constants_override;
    bool richardson = true;        ///< one extrapolation level on top of implicit Euler
    std::optional<std::uint64_t> initial_guess_seed; ///< start sweeps from a random
                                                     ///< candidate (uniqueness studies)
};

struct IntervalStats {
    double t_lo = 0.0;
    double t_hi = 0.0;
    int iterations = 0;
    double contraction = 0.0; ///< max trusted increment ratio (0 if fewer than 2 pairs)
    int bisect_depth = 0;
    std::vector<double> increments; ///< relative increments per sweep
};

struct SolveComponent {
    std::string slot;
    GridFunction trajectory;
};

struct SolveReport {
    explicit SolveReport(GridFunction traj) : trajectory(std::move(traj)) {}

    GridFunction trajectory;
    std::string scheme;
    std::vector<double> partition; ///< subdivision points actually used, 0 and T included
    std::vector<IntervalStats> intervals;
    std::map<std::string, double> norms;
    std::map<std::string, double> constants;
    double residual = 0.0;     ///< final relative increment: the discrete defect
                               ///< of the returned fixed-point iterate
    double residual_tol = 0.0;
    std::vector<SolveComponent> components;
};

// ---------------------------------------------------------------------------
// reference solve: no fixed-point machinery, perturbation folded into the
// implicit matrix. Used as an independent cross-check for the split schemes.
// ---------------------------------------------------------------------------

inline GridFunction oracle_solve(const OperatorFamily& A, const Perturbation& B,
                                 const Inhomogeneity& f, const Eigen::VectorXd& u0,
                                 const GridPtr& grid, bool richardson = true) {
    CellIntegral rhs = [&](double a, double b) { return f.integral(a, b); };
    const NodeRange full = grid->full();
    if (richardson) return ie_richardson_solve(A, &B, &rhs, u0, grid, full);
    return implicit_euler_solve(A, &B, &rhs, u0, grid, full);
}

/// Utility for rescaled-envelope experiments (the perturbation lambda * B).
inline Perturbation scaled_perturbation(const Perturbation& B, double factor) {
    Perturbation out = B;
    for (auto& c : out.comps) c.b = c.b.scaled(factor);
    return out;
}

// ---------------------------------------------------------------------------
// partitioning by envelope budget
// ---------------------------------------------------------------------------

/// Greedy partition 0 = tau_0 < ... < tau_N = T with the weighted L^q mass of
/// the envelope equal to `budget` on every piece except possibly the last.
/// Uses the closed-form mass inverse, so the points are exact up to rounding.
inline std::vector<double> partition_by_budget(const Envelope& env, double q, double mu,
                                               double T, double budget) {
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidInputError("partition: T must be positive");
    if (!(budget > 0.0) || !std::isfinite(budget))
        throw InvalidInputError("partition: budget must be positive");
    if (!env.in_weighted_class(q, mu, T))
        throw EnvelopeClassError("partition: envelope mass not integrable, need mu - alpha*q > -1");
    std::vector<double> pts = {0.0};
    double tau = 0.0;
    const std::size_t hard_cap = 2'000'000;
    while (tau < T) {
        const double sigma = env.invert_budget(q, mu, tau, budget, T);
        if (!(sigma > tau))
            throw ConvergenceError("partition: stalled at t = " + std::to_string(tau));
        pts.push_back(sigma);
        tau = sigma;
        if (pts.size() > hard_cap) throw ConvergenceError("partition: exceeded interval cap");
    }
    pts.back() = T;
    return pts;
}

/// One summand of a composite budget: the envelope's weighted L^q mass.
struct BudgetTerm {
    const Envelope* env;
    double q;
    double mu;
};

/// Same greedy walk charging the budget against a sum of envelope masses. The
/// summed mass is continuous and strictly increasing in the right endpoint
/// wherever it is positive, so each step is a plain bisection.
inline std::vector<double> partition_by_budget(const std::vector<BudgetTerm>& terms, double T,
                                               double budget) {
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidInputError("partition: T must be positive");
    if (!(budget > 0.0) || !std::isfinite(budget))
        throw InvalidInputError("partition: budget must be positive");
    if (terms.empty()) return {0.0, T};
    for (const auto& tm : terms)
        if (!tm.env->in_weighted_class(tm.q, tm.mu, T))
            throw EnvelopeClassError("partition: component envelope mass not integrable");
    auto mass = [&](double a, double b) {
        double s = 0.0;
        for (const auto& tm : terms) s += tm.env->class_norm(tm.q, tm.mu, a, b);
        return s;
    };
    std::vector<double> pts = {0.0};
    double tau = 0.0;
    const std::size_t hard_cap = 2'000'000;
    while (tau < T) {
        double sigma = T;
        if (mass(tau, T) > budget) {
            double lo = tau, hi = T;
            for (int k = 0; k < 200 && hi - lo > 1e-15 * T; ++k) {
                const double mid = 0.5 * (lo + hi);
                if (mass(tau, mid) < budget) lo = mid; else hi = mid;
            }
            sigma = 0.5 * (lo + hi);
        }
        if (!(sigma > tau))
            throw ConvergenceError("partition: stalled at t = " + std::to_string(tau));
        pts.push_back(sigma);
        tau = sigma;
        if (pts.size() > hard_cap) throw ConvergenceError("partition: exceeded interval cap");
    }
    pts.back() = T;
    return pts;
}

// ---------------------------------------------------------------------------
// solve-operator norm estimation
// ---------------------------------------------------------------------------

struct MrEstimate {
    double value = 0.0; ///< max over all probes
    double modal = 0.0; ///< max over single-mode closed-form responses
    std::vector<double> sample_ratios;
    std::vector<double> modal_ratios;
    std::uint64_t seed = 0;
};

/// Lower-biased estimate of the norm of f -> u for u' + Au = f, u(0) = 0:
/// trajectory norm over weighted forcing norm, maximized over random
/// cell-constant forcings with random truncation points and, for diagonal
/// autonomous families, over the exact per-mode step responses
/// (1 - e^{-lambda t}) / lambda.
inline MrEstimate estimate_mr_constant(const OperatorFamily& A, double p, double kappa,
                                       const GridPtr& grid, int samples = 12,
                                       std::uint64_t seed = 2026) {
    detail::check_mr_weight(p, kappa);
    const std::size_t n = A.scale->dim();
    const double T = grid->T();
    MrEstimate est;
    est.seed = seed;
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(std::max<std::size_t>(1, grid->cells() / 2),
                                                    grid->cells());
    const GridPtr fine = share(grid->refined());

    for (int s = 0; s < samples; ++s) {
        ForcingComponent comp = ForcingComponent::piecewise(ForcingSlot::base(p, kappa), grid,
                                                            random_cell_values(grid, n, rng));
        const std::size_t cut = pick(rng);
        const NodeRange r{0, cut};
        const double fn = comp.slot_norm(*A.scale, 0.0, grid->node(cut));
        if (!(fn > 0.0)) continue;
        CellIntegral rhs = [&](double a, double b) { return comp.integral(a, b); };
        GridFunction u = ie_richardson_solve(
            A, nullptr, &rhs, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)), grid, r, fine);
        est.sample_ratios.push_back(mr_norm(u, p, kappa, *A.scale, &r) / fn);
    }
    if (A.diagonal && A.autonomous) {
        const double fnorm_scalar =
            std::pow(TimeGrid::weight_mass_between(0.0, T, kappa), 1.0 / p);
        for (std::size_t i = 0; i < n; ++i) {
            const double lam = A.diag_base[static_cast<Eigen::Index>(i)];
            GridFunction u = GridFunction::sample(grid, [&](double t) {
                Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
                v[static_cast<Eigen::Index>(i)] = -std::expm1(-lam * t) / lam;
                return v;
            });
            est.modal_ratios.push_back(mr_norm(u, p, kappa, *A.scale) / fnorm_scalar);
        }
    }
    auto vmax = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, x);
        return m;
    };
    est.modal = vmax(est.modal_ratios);
    est.value = std::max(vmax(est.sample_ratios), est.modal);
    if (!(est.value > 0.0)) throw ConvergenceError("estimate_mr_constant: no valid samples");
    return est;
}

// ---------------------------------------------------------------------------
// shared interval-walk driver
// ---------------------------------------------------------------------------

namespace detail {

/// Measured contraction factor from an increment history: the largest ratio
/// d_k / d_{k-1} over pairs whose predecessor is still well above the stopping
/// noise floor, so the converged tail cannot distort the rate.
inline double trusted_contraction(const std::vector<double>& d, double noise_floor) {
    double c = 0.0;
    for (std::size_t k = 1; k < d.size(); ++k)
        if (d[k - 1] > noise_floor && d[k - 1] > 0.0) c = std::max(c, d[k] / d[k - 1]);
    return c;
}

struct IntervalTask {
    double lo;
    double hi;
    int depth;
};

/// Walks the partition left to right. Per interval: scheme.prepare is given
/// the current mesh and incoming value, then the fixed-point map scheme.phi is
/// iterated from scheme.initial() until the relative L^p(t^kappa; X_1)
/// increment drops below opts.tol. If the measured contraction factor exceeds
/// the cap, the interval is split at scheme.split_point (which becomes a real
/// mesh node) and both halves are redone one level deeper. Committed values
/// are written into u; intervals/partition/bisections are recorded on rep.
template <class Scheme>
inline void run_interval_walk(Scheme& S, const HilbertScale& scale, GridPtr& mesh, GridPtr& fine,
                              GridFunction& u, const std::vector<double>& parts, double p_dist,
                              double kappa_dist, const SolverOptions& opts, SolveReport& rep) {
    // Near-critical envelopes put boundaries below the mesh resolution; such
    // slivers collapse onto one node and cannot be stepped, so they merge into
    // the interval that follows (envelope mass is additive, the budget still
    // covers the union).
    std::vector<IntervalTask> tasks;
    double task_lo = parts.front();
    for (std::size_t k = 1; k < parts.size(); ++k) {
        if (mesh->index_of(parts[k]) == mesh->index_of(task_lo)) continue;
        tasks.push_back({task_lo, parts[k], 0});
        task_lo = parts[k];
    }
    if (tasks.empty()) tasks.push_back({parts.front(), parts.back(), 0});
    const std::size_t initial_count = tasks.size();
    const SpaceLevel x1 = SpaceLevel::power(1.0);

    std::size_t ti = 0;
    while (ti < tasks.size()) {
        const IntervalTask task = tasks[ti];
        const NodeRange range{mesh->index_of(task.lo), mesh->index_of(task.hi)};
        S.prepare(mesh, fine, range, u.value(range.lo));
        GridFunction cur = [&] {
            if (opts.initial_guess_seed) {
                Rng r(*opts.initial_guess_seed);
                return S.phi(random_grid_function(mesh, u.dim(), r, true));
            }
            return S.initial();
        }();

        IntervalStats st;
        st.t_lo = task.lo;
        st.t_hi = task.hi;
        st.bisect_depth = task.depth;
        for (int it = 1;; ++it) {
            GridFunction nxt = S.phi(cur);
            const double d = lp_distance(nxt, cur, p_dist, kappa_dist, x1, scale, &range);
            // stopping per the documented rule: increment below tol * max(1, norm)
            const double denom =
                std::max(1.0, time_lq_norm(nxt, p_dist, kappa_dist, x1, scale, &range));
            cur = std::move(nxt);
            st.iterations = it;
            st.increments.push_back(d / denom);
            if (d <= opts.tol * denom) break;
            if (it >= opts.max_iter)
                throw ConvergenceError("fixed-point sweep did not converge in " +
                                       std::to_string(opts.max_iter) + " iterations on [" +
                                       std::to_string(task.lo) + ", " + std::to_string(task.hi) +
                                       "]");
        }
        st.contraction = trusted_contraction(st.increments, 100.0 * opts.tol);

        if (st.contraction > opts.contraction_cap && task.depth < opts.max_bisect) {
            double sigma = S.split_point(task.lo, task.hi);
            if (!(sigma > task.lo) || !(sigma < task.hi)) sigma = 0.5 * (task.lo + task.hi);
            GridPtr finer = share(mesh->with_nodes({sigma}));
            if (finer->nodes() != mesh->nodes()) {
                u = u.on_grid(finer);
                mesh = finer;
                fine = share(mesh->refined());
            }
            sigma = mesh->node(mesh->index_of(sigma)); // the actual node after snapping
            if (sigma > task.lo && sigma < task.hi) {
                tasks[ti] = IntervalTask{task.lo, sigma, task.depth + 1};
                tasks.insert(tasks.begin() + static_cast<std::ptrdiff_t>(ti) + 1,
                             IntervalTask{sigma, task.hi, task.depth + 1});
                continue; // redo the left half on the refined split
            }
            // interval too thin to split; accept the sweep as converged
        }

        for (std::size_t j = range.lo + 1; j <= range.hi; ++j) u.set(j, cur.value(j));
        S.commit(range, cur);
        rep.intervals.push_back(std::move(st));
        ++ti;
    }

    rep.partition.clear();
    for (const auto& tk : tasks) rep.partition.push_back(tk.lo);
    rep.partition.push_back(tasks.back().hi);
    rep.constants["bisections"] = static_cast<double>(tasks.size() - initial_count);
    if (!rep.intervals.empty()) {
        double rmax = 0.0;
        for (const auto& iv : rep.intervals)
            if (!iv.increments.empty()) rmax = std::max(rmax, iv.increments.back());
        rep.residual = rmax;
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// critical lower-order perturbation: interval-wise Picard scheme
// ---------------------------------------------------------------------------

namespace detail {

struct PicardScheme {
    const OperatorFamily& A;
    const Perturbation& B;
    const Inhomogeneity& f;
    const SolverOptions& opts;
    double q;

    GridPtr mesh;
    GridPtr fine;
    NodeRange range{0, 0};
    std::optional<GridFunction> ztil; ///< homogeneous continuation of the incoming value

    void prepare(const GridPtr& m, const GridPtr& fg, NodeRange r, const Eigen::VectorXd& init) {
        mesh = m;
        fine = fg;
        range = r;
        ztil = solve(nullptr, init);
    }

    GridFunction solve(const CellIntegral* rhs, const Eigen::VectorXd& init) const {
        if (opts.richardson) return ie_richardson_solve(A, nullptr, rhs, init, mesh, range, fine);
        return implicit_euler_solve(A, nullptr, rhs, init, mesh, range);
    }

    /// u = ztil + S_0(f - B u): continuation plus zero-initial correction.
    GridFunction phi(const GridFunction& v) const {
        CellIntegral rhs = [&](double a, double b) {
            Eigen::VectorXd x = f.integral(a, b);
            x -= perturb_cell_integral(B, v, a, b);
            return x;
        };
        GridFunction out = solve(&rhs, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(
                                           A.scale->dim())));
        out += *ztil;
        return out;
    }

    GridFunction initial() const { return phi(GridFunction(mesh, A.scale->dim())); }

    /// Split where the envelope's q-mass halves (time midpoint as fallback).
    double split_point(double a, double b) const {
        const Envelope& env = B.comps.front().b;
        const double mass = env.class_norm(q, 0.0, a, b);
        if (mass > 0.0 && std::isfinite(mass))
            return env.invert_budget(q, 0.0, a, mass * std::pow(0.5, 1.0 / q), b);
        return 0.5 * (a + b);
    }

    void commit(NodeRange, const GridFunction&) {}
};

} // namespace detail

/// Solve u' + Au + Bu = f, u(0) = u0 for a critical lower-order perturbation
/// B = b(t) * (fractional power), b in L^q(0,T), q >= p. The horizon is
/// partitioned so each piece carries envelope q-mass at most 1 / (2 C0 M);
/// on each piece the trajectory is the homogeneous continuation of the
/// incoming value plus a zero-initial Picard corrector.
inline SolveReport picard_solve(const OperatorFamily& A, const Perturbation& B,
                                const Inhomogeneity& f, const Eigen::VectorXd& u0, double p,
                                double kappa, BudgetConstants bc, const GridPtr& grid,
                                SolverOptions opts = {}) {
    detail::check_mr_weight(p, kappa);
    if (B.kind != PerturbKind::LqCritical || B.comps.size() != 1)
        throw InvalidInputError("picard_solve expects a single critical lower-order perturbation");
    const auto& pc = B.comps.front();
    const double q = to_double(pc.q_class);
    if (q < p * (1.0 - 1e-12))
        throw ParameterError("picard_solve: envelope class exponent q must be >= p");
    const double T = grid->T();
    if (!pc.b.in_weighted_class(q, 0.0, T))
        throw EnvelopeClassError("picard_solve: envelope is not q-integrable on (0,T)");
    f.require_in_class(T);
    const std::size_t n = A.scale->dim();
    if (static_cast<std::size_t>(u0.size()) != n)
        throw InvalidInputError("picard_solve: initial value dimension mismatch");

    if (opts.constants_override) bc = *opts.constants_override;
    const double budget =
        opts.budget_override ? *opts.budget_override : 1.0 / (2.0 * bc.C0 * bc.M);
    const std::vector<double> parts = partition_by_budget(pc.b, q, 0.0, T, budget);

    GridPtr mesh = share(grid->with_nodes(parts));
    GridPtr fine = share(mesh->refined());
    GridFunction u(mesh, n);
    u.set(0, u0);

    SolveReport rep(u);
    rep.scheme = "picard";
    rep.residual_tol = opts.tol;

    detail::PicardScheme S{A, B, f, opts, q, mesh, fine, {0, 0}, std::nullopt};
    detail::run_interval_walk(S, *A.scale, mesh, fine, u, parts, p, kappa, opts, rep);

    rep.trajectory = std::move(u);
    const auto& traj = rep.trajectory;
    const auto& sc = *A.scale;
    rep.norms["lp_x1"] = weighted_lp_norm(traj, p, kappa, SpaceLevel::power(1.0), sc);
    rep.norms["w1p_x0"] = w1p_norm(traj, p, kappa, SpaceLevel::power(0.0), sc);
    rep.norms["mr"] = std::max(rep.norms["lp_x1"], rep.norms["w1p_x0"]);
    rep.norms["trace_sup"] =
        trace_sup_norm(traj, 0.0, SpaceLevel::interp(1.0 - (1.0 + kappa) / p, p), sc);
    rep.norms["trace_sup_weighted"] =
        trace_sup_norm(traj, kappa / p, SpaceLevel::interp(1.0 - 1.0 / p, p), sc);

    rep.constants["C0"] = bc.C0;
    rep.constants["M"] = bc.M;
    rep.constants["budget"] = budget;
    rep.constants["intervals"] = static_cast<double>(rep.intervals.size());
    double bmin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < rep.intervals.size(); ++k)
        bmin = std::min(bmin, pc.b.class_norm(q, 0.0, rep.intervals[k].t_lo,
                                              rep.intervals[k].t_hi));
    rep.constants["budget_min_used"] = std::isfinite(bmin) ? bmin : budget;
    rep.constants["envelope_norm"] = pc.b.class_norm(q, 0.0, 0.0, T);
    return rep;
}

// ---------------------------------------------------------------------------
// exponential bound check for the borderline class q = p
// ---------------------------------------------------------------------------

struct GronwallReport {
    std::vector<double> lambdas;
    std::vector<double> ratios; ///< trajectory norm over forcing norm
    std::vector<double> bounds; ///< 2CM exp(2^{p-1}/p (CM)^p lambda^p ||b||_p^p)
    double C = 0.0;             ///< measured trace constant
    double M = 0.0;             ///< measured solve-operator norm
    double envelope_norm = 0.0;
    bool pass = true;
};

/// For B with envelope class exponent q = p, the a-priori bound is
/// exponential in the envelope mass rather than a fixed-point budget:
///   ||u||_MR <= 2 C M exp( (2^{p-1}/p) (C M)^p ||lambda b||_p^p ) ||f||.
/// The trajectory for each rescaling lambda * b is computed by the reference
/// solver, so this check is independent of the Picard machinery.
inline GronwallReport gronwall_check(const OperatorFamily& A, const Perturbation& B,
                                     const Inhomogeneity& f, double p, double kappa,
                                     const GridPtr& grid, int samples = 10,
                                     std::uint64_t seed = 7) {
    detail::check_mr_weight(p, kappa);
    if (B.kind != PerturbKind::LqCritical || B.comps.size() != 1)
        throw InvalidInputError("gronwall_check expects a single critical lower-order perturbation");
    const auto& pc = B.comps.front();
    const double q = to_double(pc.q_class);
    if (std::abs(q - p) > 1e-9 * std::max(1.0, p))
        throw ParameterError("gronwall_check: envelope class exponent must equal p");
    const double T = grid->T();
    if (!pc.b.in_weighted_class(p, 0.0, T))
        throw EnvelopeClassError("gronwall_check: envelope is not p-integrable on (0,T)");
    f.require_in_class(T);

    const auto& sc = *A.scale;
    const std::size_t n = sc.dim();
    GronwallReport rep;
    rep.envelope_norm = pc.b.class_norm(p, 0.0, 0.0, T);

    // trace constant: sup of weighted instantaneous norm over trajectory norm
    const SpaceLevel tr = SpaceLevel::interp(1.0 - 1.0 / p, p);
    Rng rng(seed);
    std::vector<GridFunction> ws = probe_functions(grid, sc);
    for (int s = 0; s < samples; ++s) ws.push_back(random_grid_function(grid, n, rng, true));
    for (const auto& w : ws) {
        const double den = mr_norm(w, p, kappa, sc);
        if (!(den > 0.0)) continue;
        rep.C = std::max(rep.C, trace_sup_norm(w, kappa / p, tr, sc) / den);
    }
    rep.M = estimate_mr_constant(A, p, kappa, grid, samples, seed ^ 0x9e3779b97f4a7c15ull).value;

    const double fnorm = f.sum_norm_upper(0.0, T);
    if (!(fnorm > 0.0)) throw InvalidInputError("gronwall_check: forcing must be nonzero");
    const double cm = rep.C * rep.M;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (double lam : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        GridFunction u = oracle_solve(A, scaled_perturbation(B, lam), f, zero, grid);
        const double ratio = mr_norm(u, p, kappa, sc) / fnorm;
        const double bound =
            2.0 * cm *
            std::exp(std::pow(2.0, p - 1.0) / p *
                     std::pow(cm * lam * rep.envelope_norm, p));
        rep.lambdas.push_back(lam);
        rep.ratios.push_back(ratio);
        rep.bounds.push_back(bound);
        if (!(ratio <= bound * (1.0 + 1e-9))) rep.pass = false;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// mixed-smoothness perturbation sum: rung decomposition scheme
// ---------------------------------------------------------------------------

struct MixedExponents {
    Rat p;
    Rat kappa;
    Rat gamma_star;
};

namespace detail {

struct MixedScheme {
    const OperatorFamily& A;
    const std::vector<OperatorFamily>& aux; ///< empty: none; one: shared; else per slot
    const Perturbation& B;
    const SolverOptions& opts;
    double pd, kd;
    std::vector<double> qv, muv; ///< envelope class exponents per slot
    std::vector<std::vector<const ForcingComponent*>> slot_f; ///< [0]=base, [j]=rung j (1-based)

    GridPtr mesh;
    GridPtr fine;
    NodeRange range{0, 0};
    std::optional<GridFunction> fixed_part;  ///< ztil + base solve + all forcing paths
    std::optional<GridFunction> base_fixed;  ///< ztil + base solve + forcing-path corrections
    std::vector<GridFunction> fpath_v;       ///< forcing-path rung pieces
    std::vector<GridFunction> bpath_v, bpath_w; ///< feedback paths of the latest sweep

    GridFunction* base_out = nullptr;
    std::vector<GridFunction>* rung_out = nullptr;
    double* mr_plus_upper = nullptr;

    const OperatorFamily& aux_for(std::size_t i) const {
        return aux.size() == 1 ? aux.front() : aux[i];
    }

    GridFunction solve(const OperatorFamily& F, const CellIntegral* rhs,
                       const Eigen::VectorXd& init) const {
        if (opts.richardson) return ie_richardson_solve(F, nullptr, rhs, init, mesh, range, fine);
        return implicit_euler_solve(F, nullptr, rhs, init, mesh, range);
    }

    Eigen::VectorXd zero() const {
        return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(A.scale->dim()));
    }

    /// Zero-initial solve routed through the slot's auxiliary realization plus
    /// the correction back to A: (v + w)' + A (v + w) = g exactly.
    std::pair<GridFunction, GridFunction> path(std::size_t i, const CellIntegral& rhs) const {
        if (aux.empty()) return {solve(A, &rhs, zero()), GridFunction(mesh, A.scale->dim())};
        const OperatorFamily& Ai = aux_for(i);
        GridFunction v = solve(Ai, &rhs, zero());
        CellIntegral corr = [&](double a, double b) {
            Eigen::VectorXd x = family_cell_integral(Ai, v, a, b);
            x -= family_cell_integral(A, v, a, b);
            return x;
        };
        GridFunction w = solve(A, &corr, zero());
        return {std::move(v), std::move(w)};
    }

    void prepare(const GridPtr& m, const GridPtr& fg, NodeRange r, const Eigen::VectorXd& init) {
        mesh = m;
        fine = fg;
        range = r;
        GridFunction acc = solve(A, nullptr, init); // homogeneous continuation
        if (!slot_f[0].empty()) {
            CellIntegral brhs = [&](double a, double b) {
                Eigen::VectorXd x = zero();
                for (const auto* c : slot_f[0]) x += c->integral(a, b);
                return x;
            };
            acc += solve(A, &brhs, zero());
        }
        GridFunction basefix = acc;
        fpath_v.clear();
        for (std::size_t i = 0; i < B.comps.size(); ++i) {
            if (slot_f[1 + i].empty()) {
                fpath_v.emplace_back(mesh, A.scale->dim());
                continue;
            }
            CellIntegral rhs = [&](double a, double b) {
                Eigen::VectorXd x = zero();
                for (const auto* c : slot_f[1 + i]) x += c->integral(a, b);
                return x;
            };
            auto [v, w] = path(i, rhs);
            acc += v;
            acc += w;
            basefix += w;
            fpath_v.push_back(std::move(v));
        }
        fixed_part = std::move(acc);
        base_fixed = std::move(basefix);
    }

    GridFunction phi(const GridFunction& uc) {
        GridFunction out = *fixed_part;
        bpath_v.clear();
        bpath_w.clear();
        for (std::size_t i = 0; i < B.comps.size(); ++i) {
            const auto& c = B.comps[i];
            CellIntegral rhs = [&](double a, double b) {
                Eigen::VectorXd x = detail::envelope_linear_integral(c.b, uc, a, b);
                x = (c.sign * c.factor_diag.array() * x.array()).matrix();
                return x;
            };
            auto [v, w] = path(i, rhs);
            out.axpy(-1.0, v);
            out.axpy(-1.0, w);
            bpath_v.push_back(std::move(v));
            bpath_w.push_back(std::move(w));
        }
        return out;
    }

    GridFunction initial() { return phi(GridFunction(mesh, A.scale->dim())); }

    /// Split where the summed envelope mass halves (bisection; the summed mass
    /// has no closed-form inverse across different exponent pairs).
    double split_point(double a, double b) const {
        auto mass = [&](double lo, double hi) {
            double s = 0.0;
            for (std::size_t i = 0; i < B.comps.size(); ++i)
                s += B.comps[i].b.class_norm(qv[i], muv[i], lo, hi);
            return s;
        };
        const double total = mass(a, b);
        if (!(total > 0.0) || !std::isfinite(total)) return 0.5 * (a + b);
        double lo = a, hi = b;
        for (int k = 0; k < 200 && hi - lo > 1e-14 * (b - a); ++k) {
            const double mid = 0.5 * (lo + hi);
            if (mass(a, mid) < 0.5 * total) lo = mid; else hi = mid;
        }
        return 0.5 * (lo + hi);
    }

    void commit(NodeRange r, const GridFunction&) {
        GridFunction base_piece = *base_fixed;
        for (const auto& w : bpath_w) base_piece.axpy(-1.0, w);
        double price = mr_norm(base_piece, pd, kd, *A.scale, &r);
        for (std::size_t i = 0; i < B.comps.size(); ++i) {
            GridFunction rung = fpath_v[i];
            rung.axpy(-1.0, bpath_v[i]);
            const auto& tr = B.comps[i].triple;
            price += zr_norm(rung, to_double(tr.r), to_double(tr.nu), to_double(tr.gamma),
                             *A.scale, &r);
            if (rung_out) {
                (*rung_out)[i] = (*rung_out)[i].on_grid(mesh);
                for (std::size_t j = r.lo + 1; j <= r.hi; ++j)
                    (*rung_out)[i].set(j, rung.value(j));
            }
        }
        if (mr_plus_upper) *mr_plus_upper += price;
        if (base_out) {
            *base_out = base_out->on_grid(mesh);
            for (std::size_t j = r.lo + 1; j <= r.hi; ++j) base_out->set(j, base_piece.value(j));
        }
    }
};

} // namespace detail

/// Measured Lipschitz constant of the combined feedback-and-solve loop
/// w -> sum_i path_i(B_i w), normalized by the total envelope mass and the
/// trajectory norm of the probe. Deterministic probes plus a few random ones.
inline double measure_mixed_feedback_constant(const OperatorFamily& A,
                                              const std::vector<OperatorFamily>& aux,
                                              const Perturbation& B,
                                              const std::vector<double>& qv,
                                              const std::vector<double>& muv, double p,
                                              double kappa, const GridPtr& grid,
                                              const SolverOptions& opts,
                                              std::uint64_t seed = 11) {
    const auto& sc = *A.scale;
    double total_mass = 0.0;
    for (std::size_t i = 0; i < B.comps.size(); ++i)
        total_mass += B.comps[i].b.class_norm(qv[i], muv[i], 0.0, grid->T());
    if (!(total_mass > 0.0)) return 1.0;

    detail::MixedScheme S{A, aux, B, opts, p, kappa, qv, muv, {}, nullptr, nullptr,
                          {0, 0}};
    S.mesh = grid;
    S.fine = share(grid->refined());
    S.range = grid->full();

    Rng rng(seed);
    std::vector<GridFunction> ws = probe_functions(grid, sc);
    for (int s = 0; s < 3; ++s) ws.push_back(random_grid_function(grid, sc.dim(), rng, true));
    const SpaceLevel x1 = SpaceLevel::power(1.0);
    double c0 = 0.0;
    for (const auto& w : ws) {
        const double den = time_lq_norm(w, p, kappa, x1, sc);
        if (!(den > 0.0)) continue;
        GridFunction img(S.mesh, sc.dim());
        for (std::size_t i = 0; i < B.comps.size(); ++i) {
            const auto& c = B.comps[i];
            CellIntegral rhs = [&](double a, double b) {
                Eigen::VectorXd x = detail::envelope_linear_integral(c.b, w, a, b);
                x = (c.sign * c.factor_diag.array() * x.array()).matrix();
                return x;
            };
            auto [v, wv] = S.path(i, rhs);
            img += v;
            img += wv;
        }
        c0 = std::max(c0, time_lq_norm(img, p, kappa, x1, sc) / (total_mass * den));
    }
    return c0 > 0.0 ? c0 : 1.0;
}

/// Solve u' + Au + sum_i B_i u = f, u(0) = u0 where each B_i maps the domain
/// height beta_i to level gamma_i with an envelope admissible for (p, kappa).
/// Every slot is validated first (ParameterError naming the violated clause;
/// EnvelopeClassError for envelopes outside their companion class). Each
/// interval iterate decomposes into a base trajectory priced in the
/// maximal-regularity norm plus one intermediate rung per slot; the summed
/// component prices give the reported sum-space upper bound.
inline SolveReport mixed_scale_solve(const OperatorFamily& A,
                                     const std::vector<OperatorFamily>& aux,
                                     const Perturbation& B, const Inhomogeneity& f,
                                     const Eigen::VectorXd& u0, const MixedExponents& ex,
                                     const GridPtr& grid, SolverOptions opts = {}) {
    if (B.kind != PerturbKind::MixedScale || B.comps.empty())
        throw InvalidInputError("mixed_scale_solve expects a mixed-smoothness perturbation sum");
    const double pd = to_double(ex.p);
    const double kd = to_double(ex.kappa);
    detail::check_mr_weight(pd, kd);
    const auto& sc = *A.scale;
    if (std::abs(to_double(ex.gamma_star) - sc.gamma_star()) > 1e-12)
        throw InvalidInputError("mixed_scale_solve: gamma_star does not match the scale");
    if (!aux.empty() && aux.size() != 1 && aux.size() != B.comps.size())
        throw InvalidInputError("mixed_scale_solve: auxiliary family count mismatch");
    for (const auto& F : aux)
        if (F.scale->dim() != sc.dim())
            throw InvalidInputError("mixed_scale_solve: auxiliary family dimension mismatch");
    const std::size_t n = sc.dim();
    if (static_cast<std::size_t>(u0.size()) != n)
        throw InvalidInputError("mixed_scale_solve: initial value dimension mismatch");
    const double T = grid->T();

    // slot validation: admissibility first, then envelope classes
    std::vector<double> qv, muv;
    for (std::size_t i = 0; i < B.comps.size(); ++i) {
        const auto& tr = B.comps[i].triple;
        const AdmissibilityVerdict v = is_admissible(ex.p, ex.kappa, ex.gamma_star, tr);
        if (!v.admissible)
            throw ParameterError("slot " + std::to_string(i) +
                                 " violates admissibility: " + v.reason());
        const auto se = tr.beta == Rat(1)
                            ? holder_exponents(ex.p, ex.kappa, tr.r, tr.nu)
                            : generalized_b_params(ex.p, ex.kappa, tr.r, tr.nu, tr.beta);
        if (!se)
            throw ParameterError("slot " + std::to_string(i) +
                                 ": companion exponents degenerate (r theta = p); use r < p");
        qv.push_back(to_double(se->q));
        muv.push_back(to_double(se->mu));
    }
    for (std::size_t i = 0; i < B.comps.size(); ++i)
        if (!B.comps[i].b.in_weighted_class(qv[i], muv[i], T))
            throw EnvelopeClassError("slot " + std::to_string(i) +
                                     ": envelope outside its companion class L^q(t^mu dt)");

    // forcing slots: base plus one rung per perturbation component
    std::vector<std::vector<const ForcingComponent*>> slot_f(1 + B.comps.size());
    for (const auto& c : f.comps) {
        const std::string& name = c.slot().name;
        if (name == "base") {
            slot_f[0].push_back(&c);
            continue;
        }
        if (name.rfind("rung", 0) == 0) {
            // slot names are 1-based: rung1 prices through B.comps[0]
            const std::size_t i = static_cast<std::size_t>(std::stoul(name.substr(4)));
            if (i < 1 || i > B.comps.size())
                throw InvalidInputError("forcing slot " + name + " has no matching perturbation");
            const auto& tr = B.comps[i - 1].triple;
            if (std::abs(c.slot().p - to_double(tr.r)) > 1e-12 ||
                std::abs(c.slot().nu - to_double(tr.nu)) > 1e-12)
                throw InvalidInputError("forcing slot " + name +
                                        " exponents do not match the perturbation slot");
            slot_f[i].push_back(&c);
            continue;
        }
        throw InvalidInputError("mixed_scale_solve: unsupported forcing slot " + name);
    }
    f.require_in_class(T);

    double c0_measured;
    if (opts.constants_override) {
        c0_measured = opts.constants_override->C0;
    } else {
        c0_measured = measure_mixed_feedback_constant(A, aux, B, qv, muv, pd, kd, grid, opts);
    }
    const double C0 = opts.constants_override ? c0_measured
                                              : opts.budget_safety * c0_measured;
    const double budget = opts.budget_override ? *opts.budget_override : 1.0 / (2.0 * C0);

    std::vector<BudgetTerm> terms;
    for (std::size_t i = 0; i < B.comps.size(); ++i)
        terms.push_back({&B.comps[i].b, qv[i], muv[i]});
    const std::vector<double> parts = partition_by_budget(terms, T, budget);

    GridPtr mesh = share(grid->with_nodes(parts));
    GridPtr fine = share(mesh->refined());
    GridFunction u(mesh, n);
    u.set(0, u0);

    GridFunction base_out(mesh, n);
    base_out.set(0, u0); // rung pieces vanish at interval starts
    std::vector<GridFunction> rung_out(B.comps.size(), GridFunction(mesh, n));
    double mr_plus = 0.0;

    SolveReport rep(u);
    rep.scheme = "mixed";
    rep.residual_tol = opts.tol;

    detail::MixedScheme S{A,    aux,  B,    opts, pd, kd, qv, muv, slot_f,
                          mesh, fine, {0, 0}};
    S.base_out = &base_out;
    S.rung_out = &rung_out;
    S.mr_plus_upper = &mr_plus;
    detail::run_interval_walk(S, sc, mesh, fine, u, parts, pd, kd, opts, rep);

    rep.trajectory = std::move(u);
    const auto& traj = rep.trajectory;
    rep.norms["lp_x1"] = weighted_lp_norm(traj, pd, kd, SpaceLevel::power(1.0), sc);
    rep.norms["trace_sup"] =
        trace_sup_norm(traj, 0.0, SpaceLevel::interp(1.0 - (1.0 + kd) / pd, pd), sc);
    rep.norms["trace_sup_weighted"] =
        trace_sup_norm(traj, kd / pd, SpaceLevel::interp(1.0 - 1.0 / pd, pd), sc);
    rep.norms["mr_plus_upper"] = mr_plus;
    rep.norms["forcing_sum_upper"] = f.sum_norm_upper(0.0, T);

    rep.constants["C0_measured"] = c0_measured;
    rep.constants["C0"] = C0;
    rep.constants["budget"] = budget;
    rep.constants["intervals"] = static_cast<double>(rep.intervals.size());
    double total_mass = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i)
        total_mass += terms[i].env->class_norm(terms[i].q, terms[i].mu, 0.0, T);
    rep.constants["envelope_norm"] = total_mass;
    double bmin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < rep.intervals.size(); ++k) {
        double s = 0.0;
        for (const auto& tm : terms)
            s += tm.env->class_norm(tm.q, tm.mu, rep.intervals[k].t_lo, rep.intervals[k].t_hi);
        bmin = std::min(bmin, s);
    }
    rep.constants["budget_min_used"] = std::isfinite(bmin) ? bmin : budget;

    rep.components.push_back({"base", base_out.on_grid(mesh)});
    for (std::size_t i = 0; i < rung_out.size(); ++i)
        rep.components.push_back({"rung" + std::to_string(i), rung_out[i].on_grid(mesh)});
    return rep;
}

// ---------------------------------------------------------------------------
// trace-class perturbation: semigroup transference scheme
// ---------------------------------------------------------------------------

namespace detail {

struct TransferenceScheme {
    const OperatorFamily& A;
    const OperatorFamily& A0; ///< autonomous diagonal reference family
    const Perturbation& B;
    const SolverOptions& opts;
    std::vector<const ForcingComponent*> g_comps; ///< trace-slot forcing
    std::vector<const ForcingComponent*> h_comps; ///< base-slot forcing

    GridPtr mesh;
    GridPtr fine;
    NodeRange range{0, 0};
    std::optional<GridFunction> vg; ///< semigroup part of data: mild(A0, g, init)
    std::optional<GridFunction> zh; ///< regularity part of data: solve(A, h, 0)
    std::optional<GridFunction> last_mild, last_corr;

    GridFunction* mild_out = nullptr;
    GridFunction* corr_out = nullptr;

    Eigen::VectorXd zero() const {
        return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(A.scale->dim()));
    }

    GridFunction asolve(const CellIntegral* rhs, const Eigen::VectorXd& init) const {
        if (opts.richardson) return ie_richardson_solve(A, nullptr, rhs, init, mesh, range, fine);
        return implicit_euler_solve(A, nullptr, rhs, init, mesh, range);
    }

    void prepare(const GridPtr& m, const GridPtr& fg, NodeRange r, const Eigen::VectorXd& init) {
        mesh = m;
        fine = fg;
        range = r;
        CellIntegral grhs = [&](double a, double b) {
            Eigen::VectorXd x = zero();
            for (const auto* c : g_comps) x += c->integral(a, b);
            return x;
        };
        vg = mild_solve(A0, &grhs, init, mesh, range);
        if (h_comps.empty()) {
            zh = GridFunction(mesh, A.scale->dim());
        } else {
            CellIntegral hrhs = [&](double a, double b) {
                Eigen::VectorXd x = zero();
                for (const auto* c : h_comps) x += c->integral(a, b);
                return x;
            };
            zh = asolve(&hrhs, zero());
        }
    }

    /// Phi(v) = mild(A0, g - Bv, init) + solve(A, h + (A0 - A) mild-part, 0).
    GridFunction phi(const GridFunction& v) {
        CellIntegral brhs = [&](double a, double b) {
            Eigen::VectorXd x = -perturb_cell_integral(B, v, a, b);
            return x;
        };
        GridFunction vt = mild_solve(A0, &brhs, zero(), mesh, range);
        vt += *vg;
        CellIntegral crhs = [&](double a, double b) {
            Eigen::VectorXd x = family_cell_integral(A0, vt, a, b);
            x -= family_cell_integral(A, vt, a, b);
            return x;
        };
        GridFunction zc = asolve(&crhs, zero());
        zc += *zh;
        GridFunction out = vt;
        out += zc;
        last_mild = std::move(vt);
        last_corr = std::move(zc);
        return out;
    }

    GridFunction initial() { return phi(GridFunction(mesh, A.scale->dim())); }

    double split_point(double a, double b) const {
        const Envelope& env = B.comps.front().b;
        const double pp = to_double(B.comps.front().q_class); // dual exponent p'
        const double mass = env.class_norm(pp, 0.0, a, b);
        if (mass > 0.0 && std::isfinite(mass))
            return env.invert_budget(pp, 0.0, a, mass * std::pow(0.5, 1.0 / pp), b);
        return 0.5 * (a + b);
    }

    void commit(NodeRange r, const GridFunction&) {
        if (mild_out) {
            *mild_out = mild_out->on_grid(mesh);
            for (std::size_t j = r.lo + 1; j <= r.hi; ++j)
                mild_out->set(j, last_mild->value(j));
        }
        if (corr_out) {
            *corr_out = corr_out->on_grid(mesh);
            for (std::size_t j = r.lo + 1; j <= r.hi; ++j)
                corr_out->set(j, last_corr->value(j));
        }
    }
};

} // namespace detail

/// Measured Lipschitz constant of v -> mild(A0, -Bv, 0) + correction in the
/// unweighted solution norm (trajectory plus instantaneous trace), normalized
/// by the envelope's dual-exponent mass.
inline double measure_transference_constant(const OperatorFamily& A, const OperatorFamily& A0,
                                            const Perturbation& B, double p,
                                            const GridPtr& grid, const SolverOptions& opts,
                                            std::uint64_t seed = 13) {
    const auto& sc = *A.scale;
    const double pp = to_double(B.comps.front().q_class);
    const double total = B.comps.front().b.class_norm(pp, 0.0, 0.0, grid->T());
    if (!(total > 0.0)) return 1.0;

    detail::TransferenceScheme S{A, A0, B, opts, {}, {}};
    S.mesh = grid;
    S.fine = share(grid->refined());
    S.range = grid->full();

    Rng rng(seed);
    std::vector<GridFunction> ws = probe_functions(grid, sc);
    for (int s = 0; s < 3; ++s) ws.push_back(random_grid_function(grid, sc.dim(), rng, false));
    double c0 = 0.0;
    for (const auto& w : ws) {
        const double den = ep_norm(w, p, sc);
        if (!(den > 0.0)) continue;
        CellIntegral brhs = [&](double a, double b) {
            Eigen::VectorXd x = -perturb_cell_integral(B, w, a, b);
            return x;
        };
        GridFunction vt = mild_solve(A0, &brhs, S.zero(), grid, grid->full());
        CellIntegral crhs = [&](double a, double b) {
            Eigen::VectorXd x = family_cell_integral(A0, vt, a, b);
            x -= family_cell_integral(A, vt, a, b);
            return x;
        };
        GridFunction zc = S.asolve(&crhs, S.zero());
        GridFunction img = vt;
        img += zc;
        c0 = std::max(c0, ep_norm(img, p, sc) / (total * den));
    }
    return c0 > 0.0 ? c0 : 1.0;
}

/// Solve u' + Au + Bu = h + g, u(0) = u0 for the trace-class perturbation
/// B = b(t) * (power of height 1/p) with b in the dual class L^{p'}(0,T):
/// h is priced in L^p(X_0), g in L^1 of the instantaneous trace space. Each
/// interval iterate is a mild semigroup step for the autonomous reference
/// family A0 plus a maximal-regularity correction back to A.
inline SolveReport transference_solve(const OperatorFamily& A,
                                      const std::optional<OperatorFamily>& A0_in,
                                      const Perturbation& B, const Inhomogeneity& f,
                                      const Eigen::VectorXd& u0, double p, const GridPtr& grid,
                                      SolverOptions opts = {}) {
    if (!(p > 1.0)) throw ParameterError("transference_solve: p must exceed 1");
    if (B.kind != PerturbKind::TraceL1 || B.comps.size() != 1)
        throw InvalidInputError("transference_solve expects a single trace-class perturbation");
    const double pp = p / (p - 1.0);
    const auto& pc = B.comps.front();
    if (std::abs(to_double(pc.q_class) - pp) > 1e-9)
        throw InvalidInputError("transference_solve: perturbation was built for a different p");
    const double T = grid->T();
    if (!pc.b.in_weighted_class(pp, 0.0, T))
        throw EnvelopeClassError("transference_solve: envelope is not p'-integrable on (0,T)");
    const auto& sc = *A.scale;
    const std::size_t n = sc.dim();
    if (static_cast<std::size_t>(u0.size()) != n)
        throw InvalidInputError("transference_solve: initial value dimension mismatch");

    OperatorFamily A0 = A0_in ? *A0_in
                              : (A.autonomous && A.diagonal ? A : time_average(A, T));
    if (!A0.diagonal || !A0.autonomous)
        throw InvalidInputError("transference_solve: reference family must be autonomous diagonal");
    if (A0.scale->dim() != n)
        throw InvalidInputError("transference_solve: reference family dimension mismatch");

    std::vector<const ForcingComponent*> g_comps, h_comps;
    for (const auto& c : f.comps) {
        const std::string& name = c.slot().name;
        if (name == "base") h_comps.push_back(&c);
        else if (name == "l1_trace") g_comps.push_back(&c);
        else throw InvalidInputError("transference_solve: unsupported forcing slot " + name);
    }
    f.require_in_class(T);

    double c0_measured;
    if (opts.constants_override) {
        c0_measured = opts.constants_override->C0;
    } else {
        c0_measured = measure_transference_constant(A, A0, B, p, grid, opts);
    }
    const double C0 = opts.constants_override ? c0_measured
                                              : opts.budget_safety * c0_measured;
    const double budget = opts.budget_override ? *opts.budget_override : 1.0 / (2.0 * C0);
    const std::vector<double> parts = partition_by_budget(pc.b, pp, 0.0, T, budget);

    GridPtr mesh = share(grid->with_nodes(parts));
    GridPtr fine = share(mesh->refined());
    GridFunction u(mesh, n);
    u.set(0, u0);

    GridFunction mild_out(mesh, n);
    mild_out.set(0, u0);
    GridFunction corr_out(mesh, n);

    SolveReport rep(u);
    rep.scheme = "transference";
    rep.residual_tol = opts.tol;

    detail::TransferenceScheme S{A, A0, B, opts, g_comps, h_comps, mesh, fine, {0, 0}};
    S.mild_out = &mild_out;
    S.corr_out = &corr_out;
    detail::run_interval_walk(S, sc, mesh, fine, u, parts, p, 0.0, opts, rep);

    rep.trajectory = std::move(u);
    const auto& traj = rep.trajectory;
    rep.norms["lp_x1"] = weighted_lp_norm(traj, p, 0.0, SpaceLevel::power(1.0), sc);
    rep.norms["trace_sup"] =
        trace_sup_norm(traj, 0.0, SpaceLevel::interp(1.0 - 1.0 / p, p), sc);
    rep.norms["ep"] = std::max(rep.norms["lp_x1"], rep.norms["trace_sup"]);
    rep.norms["forcing_sum_upper"] = f.sum_norm_upper(0.0, T);

    rep.constants["C0_measured"] = c0_measured;
    rep.constants["C0"] = C0;
    rep.constants["budget"] = budget;
    rep.constants["intervals"] = static_cast<double>(rep.intervals.size());
    rep.constants["envelope_norm"] = pc.b.class_norm(pp, 0.0, 0.0, T);
    double bmin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < rep.intervals.size(); ++k)
        bmin = std::min(bmin, pc.b.class_norm(pp, 0.0, rep.intervals[k].t_lo,
                                              rep.intervals[k].t_hi));
    rep.constants["budget_min_used"] = std::isfinite(bmin) ? bmin : budget;

    rep.components.push_back({"mild", mild_out.on_grid(mesh)});
    rep.components.push_back({"correction", corr_out.on_grid(mesh)});
    return rep;
}

/// Plain mild trajectory for the autonomous diagonal family (no perturbation):
/// u(t) = e^{-tA0} u0 + int_0^t e^{-(t-s)A0} f(s) ds with exact decay factors
/// and exact per-cell data masses.
inline GridFunction semigroup_mild_solve(const OperatorFamily& A0, const Inhomogeneity& f,
                                         const Eigen::VectorXd& u0, const GridPtr& grid) {
    CellIntegral rhs = [&](double a, double b) { return f.integral(a, b); };
    return mild_solve(A0, &rhs, u0, grid, grid->full());
}

} // namespace parreg
