#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "parreg/admissibility.hpp"
#include "parreg/envelope.hpp"
#include "parreg/errors.hpp"
#include "parreg/grid.hpp"
#include "parreg/norms.hpp"
#include "parreg/operators.hpp"
#include "parreg/sampling.hpp"
#include "parreg/scale.hpp"
#include "parreg/solver.hpp"

namespace parreg {

/// Outcome of one verification check: the measured headline ratios in run
/// order, named diagnostic metrics, and a single aggregated pass flag.
/// Checks are deterministic given their seed.
struct CheckReport {
    std::string name;
    std::map<std::string, double> params;
    std::map<std::string, double> metrics;
    std::vector<double> ratios;
    bool pass = false;
    int samples = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> notes;
};

namespace detail {

/// (max - min) / max over the entries; 0 for empty or all-zero input,
/// +infinity if any entry is non-finite.
inline double rel_spread(const std::vector<double>& v) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double x : v) {
        if (!std::isfinite(x)) return std::numeric_limits<double>::infinity();
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (!(hi > 0.0)) return 0.0;
    return (hi - lo) / hi;
}

inline bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

/// Node subset used for trace suprema in the stability studies: every node in
/// the clustered head of the graded grid, a stride through the bulk, and the
/// endpoint. The drift thresholds are 10-15%, far above the subsampling error
/// for the smooth-in-time probes used here.
inline std::vector<std::size_t> sup_node_subset(const TimeGrid& g, std::size_t head = 24,
                                                std::size_t bulk = 64) {
    const std::size_t m = g.cells();
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j <= std::min(head, m); ++j) idx.push_back(j);
    const std::size_t stride = std::max<std::size_t>(1, m / bulk);
    for (std::size_t j = head + stride; j < m; j += stride) idx.push_back(j);
    if (idx.back() != m) idx.push_back(m);
    return idx;
}

/// Per-probe sup over the node subset of t^weight_exp ||u(t)||_level, all
/// probes batched through one coefficient-table product.
inline std::vector<double> trace_sups_over(const std::vector<GridFunction>& us,
                                           const std::vector<std::size_t>& idx, double weight_exp,
                                           SpaceLevel level, const HilbertScale& scale) {
    if (us.empty()) return {};
    const TimeGrid& g = us.front().grid();
    std::vector<std::size_t> use;
    for (std::size_t j : idx)
        if (!(g.node(j) == 0.0 && weight_exp > 0.0)) use.push_back(j);
    const Eigen::Index n = static_cast<Eigen::Index>(us.front().dim());
    const std::size_t K = use.size();
    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(us.size() * K));
    for (std::size_t p = 0; p < us.size(); ++p)
        for (std::size_t k = 0; k < K; ++k)
            X.col(static_cast<Eigen::Index>(p * K + k)) = us[p].value(use[k]);
    const Eigen::VectorXd ns = scale.level_norms(X, level);
    std::vector<double> out(us.size(), 0.0);
    for (std::size_t p = 0; p < us.size(); ++p)
        for (std::size_t k = 0; k < K; ++k) {
            const double t = g.node(use[k]);
            const double w = weight_exp == 0.0 ? 1.0 : std::pow(t, weight_exp);
            out[p] = std::max(out[p], w * ns[static_cast<Eigen::Index>(p * K + k)]);
        }
    return out;
}

/// Deterministic probes first, then `samples` random vanishing-at-0 draws;
/// returns the probe list and the deterministic count.
inline std::pair<std::vector<GridFunction>, std::size_t> probe_set(const GridPtr& g,
                                                                   const HilbertScale& scale,
                                                                   int samples, Rng& rng) {
    auto ps = probe_functions(g, scale);
    const std::size_t det = ps.size();
    for (int s = 0; s < samples; ++s) ps.push_back(random_grid_function(g, scale.dim(), rng, true));
    return {std::move(ps), det};
}

/// Mode-adapted probes whose relaxation tail e^{-lambda t} has decayed inside
/// every horizon of the sweep (lambda t_min >= 5 e-folds). A slower mode
/// truncated at the horizon measures the truncation, not the embedding
/// constant; if no mode qualifies the fastest one stands in.
inline std::vector<std::size_t> horizon_resolved_probes(const std::vector<std::size_t>& adapted,
                                                        const HilbertScale& scale,
                                                        double t_min) {
    const std::vector<std::size_t> modes = probe_mode_indices(scale);
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < modes.size(); ++k)
        if (scale.lambda(modes[k]) * t_min >= 5.0) out.push_back(adapted[k]);
    if (out.empty()) out.push_back(adapted.back());
    return out;
}

/// Least-squares R^2 of y against x; 1 for degenerate (constant) data.
inline double linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2) return 1.0;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) return 1.0;
    return (sxy * sxy) / (sxx * syy);
}

} // namespace detail

/// Trace embedding study: for samples u vanishing at 0, the plain trace
/// sup ||u(t)|| in the (1 - (1+kappa)/p, p) interpolation space and the
/// weighted trace sup t^{kappa/p} ||u(t)|| in the (1 - 1/p, p) space are both
/// bounded by the solution-space norm, with constants independent of the
/// horizon. Pass requires ratio drift <= 10% across the level and horizon
/// sweeps for the mode-adapted probes (the horizon-stable extremizer family),
/// finiteness of every ratio, and the coarse ceiling
/// 64 p max(1/(p-1+kappa), 1/(1+kappa)) over all probes and random draws.
inline CheckReport check_trace_embedding(const ScalePtr& scale, double p, double kappa,
                                         std::vector<std::size_t> levels = {96, 192, 384},
                                         std::vector<double> horizons = {0.25, 1.0, 4.0},
                                         int samples = 6, std::uint64_t seed = 101) {
    detail::check_mr_weight(p, kappa);
    CheckReport rep;
    rep.name = "trace_embedding";
    rep.seed = seed;
    rep.samples = samples;
    rep.params = {{"p", p}, {"kappa", kappa}};

    const SpaceLevel lv_plain = SpaceLevel::interp(1.0 - (1.0 + kappa) / p, p);
    const SpaceLevel lv_weighted = SpaceLevel::interp(1.0 - 1.0 / p, p);
    const double wexp = kappa / p;
    const double ceiling = 64.0 * p * std::max(1.0 / (p - 1.0 + kappa), 1.0 / (1.0 + kappa));
    rep.metrics["ceiling"] = ceiling;

    const std::vector<std::size_t> adapted = mode_adapted_probe_indices(*scale);
    std::vector<double> det_plain, det_weighted;
    double max_plain = 0.0, max_weighted = 0.0;
    Rng rng(seed);
    for (double T : horizons)
        for (std::size_t m : levels) {
            const GridPtr g = make_time_grid(T, m);
            auto [probes, det] = detail::probe_set(g, *scale, samples, rng);
            (void)det;
            const auto idx = detail::sup_node_subset(*g);
            const auto sup_p = detail::trace_sups_over(probes, idx, 0.0, lv_plain, *scale);
            const auto sup_w = detail::trace_sups_over(probes, idx, wexp, lv_weighted, *scale);
            double combo_plain = 0.0, combo_weighted = 0.0;
            for (std::size_t i = 0; i < probes.size(); ++i) {
                const double mr = mr_norm(probes[i], p, kappa, *scale);
                if (!(mr > 0.0)) continue;
                const double rp = sup_p[i] / mr, rw = sup_w[i] / mr;
                max_plain = std::max(max_plain, rp);
                max_weighted = std::max(max_weighted, rw);
                if (std::binary_search(adapted.begin(), adapted.end(), i)) {
                    combo_plain = std::max(combo_plain, rp);
                    combo_weighted = std::max(combo_weighted, rw);
                }
            }
            det_plain.push_back(combo_plain);
            det_weighted.push_back(combo_weighted);
            rep.ratios.push_back(combo_plain);
        }
    rep.ratios.insert(rep.ratios.end(), det_weighted.begin(), det_weighted.end());

    // Fixed regression sample: scalar u(t) = t on (0, 1). The node sups are
    // attained at t = T and the solution-space norm has closed form, so the
    // measured ratios must match the semi-analytic values tightly.
    double lin_err = 0.0;
    {
        const ScalePtr s1 = make_scale({1.0}, scale->gamma_star());
        const GridPtr g = make_time_grid(1.0, levels.back());
        const GridFunction u = GridFunction::sample(g, [](double t) {
            return Eigen::VectorXd::Constant(1, t);
        });
        const Eigen::VectorXd e = Eigen::VectorXd::Ones(1);
        const double mr = mr_norm(u, p, kappa, *s1);
        const double exp_plain = s1->level_norm(e, lv_plain) / mr;
        const double exp_weighted = s1->level_norm(e, lv_weighted) / mr;
        const double got_plain = trace_sup_norm(u, 0.0, lv_plain, *s1) / mr;
        const double got_weighted = trace_sup_norm(u, wexp, lv_weighted, *s1) / mr;
        lin_err = std::max(std::abs(got_plain / exp_plain - 1.0),
                           std::abs(got_weighted / exp_weighted - 1.0));
        rep.metrics["linear_sample_err"] = lin_err;
    }

    const double drift_plain = detail::rel_spread(det_plain);
    const double drift_weighted = detail::rel_spread(det_weighted);
    rep.metrics["drift_plain"] = drift_plain;
    rep.metrics["drift_weighted"] = drift_weighted;
    rep.metrics["max_plain"] = max_plain;
    rep.metrics["max_weighted"] = max_weighted;
    rep.notes.push_back("drift measured on the mode-adapted probe subfamily; polynomial probes "
                        "and random draws feed the ceiling and finiteness checks");
    rep.pass = detail::all_finite(rep.ratios) && drift_plain <= 0.10 && drift_weighted <= 0.10 &&
               max_plain <= ceiling && max_weighted <= ceiling && lin_err <= 1e-6;
    return rep;
}

/// Lower-order products stay controlled by the envelope budget: for samples v
/// vanishing at 0 and truncation times t, ||Bv|| in L^p(0,t,w_kappa;X_0) is
/// bounded by ||b||_{L^q(0,t)} times the solution-space norm of v on (0,t),
/// with a ratio that is stable in t (15%) and under refinement (10%). The
/// truncation times follow the probed modes' relaxation scales t = e/lambda,
/// the times a truncated spectrum actually resolves. A zero envelope passes
/// with all ratios 0.
inline CheckReport check_perturbation_estimate(const Perturbation& B, double p, double kappa,
                                               std::vector<std::size_t> levels = {128, 256, 384},
                                               std::vector<double> horizons = {0.25, 1.0, 4.0},
                                               int samples = 5, std::uint64_t seed = 211) {
    detail::check_mr_weight(p, kappa);
    if (B.kind != PerturbKind::LqCritical || B.comps.size() != 1)
        throw InvalidInputError("perturbation estimate check expects a single critical "
                                "lower-order slot");
    const auto& pc = B.comps.front();
    const double q = to_double(pc.q_class);
    const HilbertScale& S = *B.scale;

    CheckReport rep;
    rep.name = "perturbation_estimate";
    rep.seed = seed;
    rep.samples = samples;
    rep.params = {{"p", p}, {"kappa", kappa}, {"q", q}};

    // Cut times ride the probed spectrum: t = e / lambda sits at the
    // relaxation scale of each probe mode, where that mode's ratio is
    // attained. Clipped to the horizon and deduplicated on the grid, the cuts
    // sweep the resolved decades of the spectrum, so the sup has to hold
    // steady while ||b||_{L^q(0,t)} shrinks through them.
    const std::vector<std::size_t> cut_modes = probe_mode_indices(S);
    std::vector<double> combo_sups;
    double t_spread_max = 0.0;
    Rng rng(seed);
    for (double T : horizons)
        for (std::size_t m : levels) {
            const GridPtr g = make_time_grid(T, m);
            if (!pc.b.is_zero() && !pc.b.in_weighted_class(q, 0.0, T))
                throw EnvelopeClassError("perturbation envelope lies outside L^q(0, T)");
            auto [probes, det] = detail::probe_set(g, S, samples, rng);
            std::set<std::size_t> cut_nodes;
            for (std::size_t mi : cut_modes) {
                const double tm = std::min(std::exp(1.0) / S.lambda(mi), T);
                cut_nodes.insert(std::min<std::size_t>(g->locate(tm) + 1, g->cells()));
            }
            std::vector<double> per_cut;
            for (std::size_t jc : cut_nodes) {
                const double tc = g->node(jc);
                const NodeRange r{0, jc};
                const double bq = pc.b.is_zero() ? 0.0 : pc.b.class_norm(q, 0.0, 0.0, tc);
                double sup = 0.0;
                for (std::size_t i = 0; i < det; ++i) {
                    const auto& v = probes[i];
                    const double den = bq * mr_norm(v, p, kappa, S, &r);
                    if (!(den > 0.0)) continue;
                    const double num = time_lq_norm_fn(
                        [&](double t) { return B.apply(t, v.eval(t)); }, p, kappa,
                        SpaceLevel::power(0.0), S, *g, &r);
                    sup = std::max(sup, num / den);
                }
                per_cut.push_back(sup);
            }
            t_spread_max = std::max(t_spread_max, detail::rel_spread(per_cut));
            combo_sups.push_back(*std::max_element(per_cut.begin(), per_cut.end()));
            rep.ratios.push_back(combo_sups.back());
        }

    // Closed-form regression on the scalar scale: b constant, v(t) = t on
    // (0, 1), so both sides are explicit power integrals.
    double reg_err = 0.0;
    if (!pc.b.is_zero()) {
        const ScalePtr s1 = make_scale({1.0}, B.scale->gamma_star());
        const Perturbation B1 = make_lq_perturbation(s1, Envelope::constant(1.0), pc.q_class);
        const GridPtr g = make_time_grid(1.0, 512);
        const GridFunction v = GridFunction::sample(g, [](double t) {
            return Eigen::VectorXd::Constant(1, t);
        });
        const double num = time_lq_norm_fn([&](double t) { return B1.apply(t, v.eval(t)); }, p,
                                           kappa, SpaceLevel::power(0.0), *s1, *g);
        const double den = mr_norm(v, p, kappa, *s1);
        const double expected = std::pow(1.0 / (p + 1.0 + kappa), 1.0 / p) /
                                std::pow(1.0 / (1.0 + kappa), 1.0 / p);
        reg_err = std::abs((num / den) / expected - 1.0);
        rep.metrics["scalar_regression_err"] = reg_err;
    }

    const double drift = detail::rel_spread(combo_sups);
    rep.metrics["drift"] = drift;
    rep.metrics["t_spread_max"] = t_spread_max;
    rep.metrics["max_ratio"] = *std::max_element(combo_sups.begin(), combo_sups.end());
    rep.pass = detail::all_finite(rep.ratios) && drift <= 0.10 && t_spread_max <= 0.15 &&
               reg_err <= 1e-4;
    return rep;
}

/// Weighted Hoelder split used to price lower-order products:
///   ||fg||_{L^r(w_nu)} <= ||f||_{L^q(w_mu)} ||g||_{L^p(w_kappa)}
/// with 1/r = 1/p + 1/q and mu = (nu p - kappa r)/(p - r). The discrete norms
/// satisfy it exactly (the cell quadrature is itself a weighted sum), so each
/// sample is asserted up to 1e-8; an aligned power family must be tight.
inline CheckReport check_weighted_holder(double p, double q, double r, double kappa, double nu,
                                         int samples = 8, std::uint64_t seed = 307) {
    if (!(r >= 1.0) || !(r < p) || !(r < q))
        throw ParameterError("weighted Hoelder split needs 1 <= r < p and r < q");
    if (std::abs(1.0 / p + 1.0 / q - 1.0 / r) > 1e-12)
        throw ParameterError("exponent relation 1/r = 1/p + 1/q violated");
    const double mu = (nu * p - kappa * r) / (p - r);
    if (!(kappa > -1.0) || !(nu > -1.0) || !(mu > -1.0))
        throw ParameterError("weights must be integrable: kappa, nu and the induced mu exceed -1");

    CheckReport rep;
    rep.name = "weighted_holder";
    rep.seed = seed;
    rep.samples = samples;
    rep.params = {{"p", p}, {"q", q}, {"r", r}, {"kappa", kappa}, {"nu", nu}, {"mu", mu}};

    const ScalePtr s1 = make_scale({1.0});
    const SpaceLevel base = SpaceLevel::power(0.0);
    const GridPtr g = make_time_grid(1.0, 256);
    Rng rng(seed);
    bool inequality_ok = true;
    const auto pair_ratio = [&](const GridFunction& f, const GridFunction& gg) {
        // explicit return type: the product expression must be materialized
        // before the eval() temporaries die
        const double lhs = time_lq_norm_fn(
            [&](double t) -> Eigen::VectorXd { return f.eval(t).cwiseProduct(gg.eval(t)); }, r,
            nu, base, *s1, *g);
        const double rhs =
            time_lq_norm(f, q, mu, base, *s1) * time_lq_norm(gg, p, kappa, base, *s1);
        if (!(lhs <= rhs * (1.0 + 1e-8))) inequality_ok = false;
        return rhs > 0.0 ? lhs / rhs : 0.0;
    };

    for (int sidx = 0; sidx < samples; ++sidx) {
        const GridFunction f = random_grid_function(g, 1, rng, false);
        const GridFunction gg = random_grid_function(g, 1, rng, false);
        rep.ratios.push_back(pair_ratio(f, gg));
    }

    // Tightness: powers aligned so |f|^q t^mu is proportional to |g|^p t^kappa,
    // the pointwise equality condition of the Hoelder bound.
    const GridPtr gf = make_time_grid(1.0, 512);
    const double a = std::max(1.0, (mu - kappa) / p + 1.0);
    const double c = (a * p + kappa - mu) / q;
    double tight = 0.0;
    {
        const GridFunction f = GridFunction::sample(gf, [&](double t) {
            return Eigen::VectorXd::Constant(1, std::pow(t, c));
        });
        const GridFunction gg = GridFunction::sample(gf, [&](double t) {
            return Eigen::VectorXd::Constant(1, std::pow(t, a));
        });
        const double lhs = time_lq_norm_fn(
            [&](double t) -> Eigen::VectorXd { return f.eval(t).cwiseProduct(gg.eval(t)); }, r,
            nu, base, *s1, *gf);
        const double rhs =
            time_lq_norm(f, q, mu, base, *s1) * time_lq_norm(gg, p, kappa, base, *s1);
        if (!(lhs <= rhs * (1.0 + 1e-8))) inequality_ok = false;
        tight = lhs / rhs;
        rep.metrics["equality_ratio"] = tight;
    }

    // Singular regression f = g = t^{-1/8} on (0,1) with p = q = 4, r = 2 and
    // flat weights; all three norms have closed forms. The node-zero value is
    // capped at the first positive node, which costs ~t_1^{1/2} of mass.
    double sing_err = 0.0;
    {
        const double t1 = gf->node(1);
        const GridFunction f = GridFunction::sample(gf, [&](double t) {
            return Eigen::VectorXd::Constant(1, std::pow(std::max(t, t1), -0.125));
        });
        const double lhs = time_lq_norm_fn(
            [&](double t) -> Eigen::VectorXd { return f.eval(t).cwiseProduct(f.eval(t)); }, 2.0,
            0.0, base, *s1, *gf);
        const double rq = time_lq_norm(f, 4.0, 0.0, base, *s1);
        if (!(lhs <= rq * rq * (1.0 + 1e-8))) inequality_ok = false;
        sing_err = std::max(std::abs(lhs / std::sqrt(2.0) - 1.0),
                            std::abs(rq / std::pow(2.0, 0.25) - 1.0));
        rep.metrics["singular_regression_err"] = sing_err;
    }

    rep.metrics["inequality_ok"] = inequality_ok ? 1.0 : 0.0;
    rep.pass = inequality_ok && detail::all_finite(rep.ratios) && tight >= 0.999 &&
               sing_err <= 5e-3;
    return rep;
}

/// Intermediate-space embedding study for an admissible exponent triple
/// (r, nu, gamma): samples w in the unit ball of
/// L^r(w_nu; X_{1+gamma}) cap W^{1,r}(w_nu; X_gamma) with w(0) = 0 embed into
/// L^p(w_kappa; X_1) and both trace families with horizon-stable constants.
/// Drift is measured on the mode-adapted probes; every probe and random draw
/// must keep the L^p ratio finite. Constants-in-time w with w(0) != 0 exhibit
/// the ratio blow-up as T drops, with the predicted rate (1+kappa)/p-(1+nu)/r.
inline CheckReport check_mixed_embedding(const ScalePtr& scale, const Rat& p, const Rat& kappa,
                                         const Rat& gamma_star, const ExponentTriple& tr,
                                         std::vector<std::size_t> levels = {96, 192, 384},
                                         std::vector<double> horizons = {0.25, 1.0, 4.0},
                                         int samples = 5, std::uint64_t seed = 409) {
    if (std::abs(to_double(gamma_star) - scale->gamma_star()) > 1e-12)
        throw InvalidInputError("gamma_star does not match the supplied scale");
    const auto verdict = is_admissible(p, kappa, gamma_star, tr);
    if (!verdict.admissible)
        throw ParameterError("triple violates admissibility: " + verdict.reason());

    const double pd = to_double(p), kd = to_double(kappa);
    const double rd = to_double(tr.r), nud = to_double(tr.nu), gd = to_double(tr.gamma);
    CheckReport rep;
    rep.name = "mixed_embedding";
    rep.seed = seed;
    rep.samples = samples;
    rep.params = {{"p", pd}, {"kappa", kd}, {"r", rd}, {"nu", nud}, {"gamma", gd}};

    const SpaceLevel lv_plain = SpaceLevel::interp(1.0 - (1.0 + kd) / pd, pd);
    const SpaceLevel lv_weighted = SpaceLevel::interp(1.0 - 1.0 / pd, pd);
    const double wexp = kd / pd;

    if (levels.empty() || horizons.empty())
        throw ParameterError("mixed embedding study needs at least one level and one horizon");
    const double t_min = *std::min_element(horizons.begin(), horizons.end());
    const std::vector<std::size_t> adapted =
        detail::horizon_resolved_probes(mode_adapted_probe_indices(*scale), *scale, t_min);
    std::vector<double> det_lp, det_plain, det_weighted;
    double max_lp = 0.0;
    Rng rng(seed);
    for (double T : horizons)
        for (std::size_t m : levels) {
            const GridPtr g = make_time_grid(T, m);
            auto [probes, det] = detail::probe_set(g, *scale, samples, rng);
            (void)det;
            const auto idx = detail::sup_node_subset(*g);
            const auto sup_p = detail::trace_sups_over(probes, idx, 0.0, lv_plain, *scale);
            const auto sup_w = detail::trace_sups_over(probes, idx, wexp, lv_weighted, *scale);
            double c_lp = 0.0, c_plain = 0.0, c_weighted = 0.0;
            for (std::size_t i = 0; i < probes.size(); ++i) {
                const double zn = zr_norm(probes[i], rd, nud, gd, *scale);
                if (!(zn > 0.0)) continue;
                const double rl = weighted_lp_norm(probes[i], pd, kd, SpaceLevel::power(1.0),
                                                   *scale) /
                                  zn;
                max_lp = std::max(max_lp, rl);
                if (!std::binary_search(adapted.begin(), adapted.end(), i)) continue;
                c_lp = std::max(c_lp, rl);
                c_plain = std::max(c_plain, sup_p[i] / zn);
                c_weighted = std::max(c_weighted, sup_w[i] / zn);
            }
            det_lp.push_back(c_lp);
            det_plain.push_back(c_plain);
            det_weighted.push_back(c_weighted);
            rep.ratios.push_back(c_lp);
        }
    rep.metrics["max_lp"] = max_lp;

    // Regression sample w(t) = t e_1: every norm in the ratio has a closed
    // form on the diagonal scale.
    double lin_err = 0.0;
    {
        const GridPtr g = make_time_grid(1.0, levels.back());
        Eigen::VectorXd e1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(scale->dim()));
        e1[0] = 1.0;
        const GridFunction w =
            GridFunction::sample(g, [&](double t) { return Eigen::VectorXd(t * e1); });
        const double l1 = scale->lambda(0);
        const double num = std::pow(l1, 1.0) * std::pow(1.0 / (pd + 1.0 + kd), 1.0 / pd);
        const double den = std::max(std::pow(l1, 1.0 + gd) *
                                        std::pow(1.0 / (rd + 1.0 + nud), 1.0 / rd),
                                    std::pow(l1, gd) * std::pow(1.0 / (1.0 + nud), 1.0 / rd));
        const double got = weighted_lp_norm(w, pd, kd, SpaceLevel::power(1.0), *scale) /
                           zr_norm(w, rd, nud, gd, *scale);
        lin_err = std::abs(got / (num / den) - 1.0);
        rep.metrics["linear_sample_err"] = lin_err;
    }

    // Blow-up branch: w identically e_1 does not vanish at 0, and its
    // L^p(w_kappa; X_1)-to-intersection ratio scales like
    // T^{(1+kappa)/p - (1+nu)/r}, growing as T drops.
    const std::array<double, 3> short_T = {1.0, 0.25, 0.0625};
    std::vector<double> blowup;
    for (double T : short_T) {
        const GridPtr g = make_time_grid(T, 96);
        Eigen::VectorXd e1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(scale->dim()));
        e1[0] = 1.0;
        const GridFunction w =
            GridFunction::sample(g, [&](double) { return Eigen::VectorXd(e1); });
        blowup.push_back(weighted_lp_norm(w, pd, kd, SpaceLevel::power(1.0), *scale) /
                         zr_norm(w, rd, nud, gd, *scale));
        rep.metrics["blowup_T" + std::to_string(blowup.size())] = blowup.back();
    }
    const bool blowup_monotone = blowup[0] < blowup[1] && blowup[1] < blowup[2];
    const double slope = std::log(blowup[2] / blowup[0]) /
                         std::log(short_T[2] / short_T[0]);
    const double expected_slope = (1.0 + kd) / pd - (1.0 + nud) / rd;
    rep.metrics["blowup_exponent"] = slope;
    rep.metrics["blowup_exponent_expected"] = expected_slope;

    const double drift = std::max({detail::rel_spread(det_lp), detail::rel_spread(det_plain),
                                   detail::rel_spread(det_weighted)});
    rep.metrics["drift"] = drift;
    rep.pass = detail::all_finite(rep.ratios) && std::isfinite(max_lp) && drift <= 0.10 &&
               blowup_monotone &&
               std::abs(slope - expected_slope) <= 0.05 * std::abs(expected_slope) + 1e-3 &&
               lin_err <= 1e-4;
    return rep;
}

/// One a-priori estimate scenario: problem family, data model and the norms
/// priced on each side. The five scenarios cover the critical lower-order
/// class (q > p), the integrated-envelope regime (q = p), the mixed-smoothness
/// decomposition, the borderline trace-class perturbation, and the mild
/// L^1-trace forcing estimate.
struct EnergyScenario {
    std::string name = "lq_critical";
    double T = 1.0;
    Rat p = Rat(2);
    Rat kappa = Rat(0);
    Rat gamma_star = Rat(1);
    Rat q = Rat(4);
    double b_scale = 0.5;
    double b_alpha = 0.125;
    std::vector<ExponentTriple> triples;
    double spike_width = 4e-3;
};

inline EnergyScenario make_energy_scenario(const std::string& name) {
    EnergyScenario sc;
    sc.name = name;
    if (name == "lq_critical") {
        // defaults already describe this regime
    } else if (name == "gronwall_lp") {
        sc.q = Rat(2);
        sc.b_alpha = 0.0;
    } else if (name == "mixed_scale") {
        sc.p = Rat(4);
        sc.gamma_star = Rat(1, 2);
        sc.triples = {ExponentTriple{Rat(4, 3), Rat(0), Rat(1, 2)}};
        sc.b_scale = 0.25;
        sc.b_alpha = 0.25;
    } else if (name == "trace_l1") {
        sc.b_scale = 0.25;
        sc.b_alpha = 0.25;
    } else if (name == "mild_l1") {
        sc.b_scale = 0.0;
    } else {
        throw InvalidInputError("unknown energy scenario: " + name);
    }
    return sc;
}

namespace detail {

struct EnergyDraw {
    Eigen::VectorXd u0;
    Inhomogeneity f;
    double rhs = 0.0;
};

/// Builds draw `d` for the scenario, scaled by `factor`. Draws 0-1 are
/// deterministic near-extremal data; later draws are random. rhs returns the
/// priced data norm (trace part plus declared slot norms).
inline EnergyDraw energy_draw(const EnergyScenario& sc, const OperatorFamily& A,
                              const GridPtr& g, int d, Rng& rng, double factor) {
    const HilbertScale& S = *A.scale;
    const std::size_t n = S.dim();
    const double T = g->T();
    const double pd = to_double(sc.p), kd = to_double(sc.kappa);
    const SpaceLevel tr_kappa = SpaceLevel::interp(1.0 - (1.0 + kd) / pd, pd);
    const SpaceLevel tr_plain = SpaceLevel::interp(1.0 - 1.0 / pd, pd);

    const auto unit_dir = [&](int which) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        if (which == 0) v[0] = 1.0;
        else if (which == 1) v[static_cast<Eigen::Index>(n - 1)] = 1.0;
        else v = randn_vector(rng, n);
        return v;
    };
    const auto normalized = [&](ForcingComponent c) {
        const double nv = c.slot_norm(S, 0.0, T);
        if (!(nv > 0.0) || !std::isfinite(nv)) throw InvalidInputError("degenerate forcing draw");
        return nv;
    };
    const auto unit_sep = [&](const ForcingSlot& slot, const Envelope& prof, int which) {
        Eigen::VectorXd dir = unit_dir(which);
        const double nv = normalized(ForcingComponent::separable(slot, prof, dir));
        return ForcingComponent::separable(slot, prof, (factor / nv) * dir);
    };
    const auto unit_pc = [&](const ForcingSlot& slot) {
        auto vals = random_cell_values(g, n, rng);
        auto c = ForcingComponent::piecewise(slot, g, vals);
        const double nv = normalized(c);
        for (auto& v : vals) v *= factor / nv;
        return ForcingComponent::piecewise(slot, g, std::move(vals));
    };
    const auto unit_trace = [&](const SpaceLevel& lv, int which) {
        Eigen::VectorXd v = unit_dir(which);
        return Eigen::VectorXd((factor / S.level_norm(v, lv)) * v);
    };

    EnergyDraw out;
    out.u0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    std::vector<ForcingComponent> comps;
    const ForcingSlot base = ForcingSlot::base(pd, kd);

    if (sc.name == "lq_critical" || sc.name == "gronwall_lp") {
        if (d == 0) comps.push_back(unit_sep(base, Envelope::constant(1.0), 0));
        else if (d == 1) comps.push_back(unit_sep(base, Envelope::power(1.0, 0.125), 1));
        else comps.push_back(unit_pc(base));
        out.rhs = factor;
    } else if (sc.name == "mixed_scale") {
        if (d >= 1) {
            out.u0 = unit_trace(tr_kappa, d == 1 ? 0 : 2);
            out.rhs += factor;
        }
        if (d <= 1) comps.push_back(unit_sep(base, Envelope::constant(1.0), d));
        else comps.push_back(unit_pc(base));
        int ri = 1;
        for (const auto& trp : sc.triples) {
            const ForcingSlot slot = ForcingSlot::rung(ri++, trp);
            if (d <= 1) comps.push_back(unit_sep(slot, Envelope::constant(1.0), 1 - d));
            else comps.push_back(unit_pc(slot));
        }
        out.rhs += factor * static_cast<double>(comps.size());
    } else if (sc.name == "trace_l1") {
        if (d >= 1) {
            out.u0 = unit_trace(tr_plain, d == 1 ? 0 : 2);
            out.rhs += factor;
        }
        if (d <= 1) comps.push_back(unit_sep(base, Envelope::constant(1.0), d));
        else comps.push_back(unit_pc(base));
        const ForcingSlot l1 = ForcingSlot::l1_trace(pd);
        if (d <= 1)
            comps.push_back(unit_sep(l1, Envelope::spike(0.05 * T, sc.spike_width * T), 1 - d));
        else comps.push_back(unit_pc(l1));
        out.rhs += 2.0 * factor;
    } else if (sc.name == "mild_l1") {
        if (d != 1) {
            out.u0 = unit_trace(tr_plain, d == 0 ? 0 : 2);
            out.rhs += factor;
        }
        const ForcingSlot l1 = ForcingSlot::l1_trace(pd);
        if (d <= 1)
            comps.push_back(unit_sep(l1, Envelope::spike(0.05 * T, sc.spike_width * T), d));
        else comps.push_back(unit_pc(l1));
        out.rhs += factor;
    }
    out.f = make_inhomogeneity(A.scale, std::move(comps));
    return out;
}

/// Data-to-solution constant of one draw for the scenario.
inline double energy_constant(const EnergyScenario& sc, const OperatorFamily& A,
                              const GridPtr& g, const EnergyDraw& dr,
                              const std::optional<BudgetConstants>& bc, double* second) {
    const HilbertScale& S = *A.scale;
    const double pd = to_double(sc.p), kd = to_double(sc.kappa);
    SolverOptions opts;
    opts.tol = 1e-11;
    double lhs = 0.0;
    if (sc.name == "lq_critical") {
        const Perturbation B =
            make_lq_perturbation(A.scale, Envelope::power(sc.b_scale, sc.b_alpha), sc.q);
        const SolveReport rep = picard_solve(A, B, dr.f, dr.u0, pd, kd, *bc, g, opts);
        lhs = rep.norms.at("mr");
    } else if (sc.name == "gronwall_lp") {
        const Perturbation B =
            make_lq_perturbation(A.scale, Envelope::power(sc.b_scale, sc.b_alpha), sc.q);
        const GridFunction u = oracle_solve(A, B, dr.f, dr.u0, g);
        lhs = mr_norm(u, pd, kd, S);
    } else if (sc.name == "mixed_scale") {
        std::vector<std::pair<ExponentTriple, Envelope>> slots;
        for (const auto& trp : sc.triples)
            slots.emplace_back(trp, Envelope::power(sc.b_scale, sc.b_alpha));
        const Perturbation B = make_mixed_perturbation(A.scale, std::move(slots));
        opts.constants_override = bc;
        const MixedExponents ex{sc.p, sc.kappa, sc.gamma_star};
        const SolveReport rep = mixed_scale_solve(A, {}, B, dr.f, dr.u0, ex, g, opts);
        lhs = rep.norms.at("lp_x1") + rep.norms.at("trace_sup") +
              rep.norms.at("trace_sup_weighted");
        if (second) *second = rep.norms.at("mr_plus_upper") / dr.rhs;
    } else if (sc.name == "trace_l1") {
        const Perturbation B =
            make_trace_perturbation(A.scale, Envelope::power(sc.b_scale, sc.b_alpha), sc.p);
        opts.constants_override = bc;
        const SolveReport rep = transference_solve(A, std::nullopt, B, dr.f, dr.u0, pd, g, opts);
        lhs = rep.norms.at("ep");
    } else if (sc.name == "mild_l1") {
        const GridFunction u = semigroup_mild_solve(A, dr.f, dr.u0, g);
        lhs = ep_norm(u, pd, S);
    }
    return lhs / dr.rhs;
}

/// Per-combo budget constants, measured once so every draw of the combo runs
/// the same partition.
inline std::optional<BudgetConstants> energy_constants_for(const EnergyScenario& sc,
                                                           const OperatorFamily& A,
                                                           const GridPtr& g,
                                                           std::uint64_t seed) {
    const double pd = to_double(sc.p), kd = to_double(sc.kappa);
    if (sc.name == "lq_critical") {
        const Perturbation B =
            make_lq_perturbation(A.scale, Envelope::power(sc.b_scale, sc.b_alpha), sc.q);
        const auto& pc = B.comps.front();
        const double qd = to_double(pc.q_class);
        const double btot = pc.b.class_norm(qd, 0.0, 0.0, g->T());
        auto probes = probe_functions(g, *A.scale);
        double c0 = 0.0;
        for (const auto& v : probes) {
            const double den = btot * mr_norm(v, pd, kd, *A.scale);
            if (!(den > 0.0)) continue;
            const double num =
                time_lq_norm_fn([&](double t) { return B.apply(t, v.eval(t)); }, pd, kd,
                                SpaceLevel::power(0.0), *A.scale, *g);
            c0 = std::max(c0, num / den);
        }
        const MrEstimate est = estimate_mr_constant(A, pd, kd, g, 6, seed);
        return BudgetConstants{2.0 * std::max(c0, 1e-2), est.value};
    }
    if (sc.name == "mixed_scale") {
        std::vector<std::pair<ExponentTriple, Envelope>> slots;
        for (const auto& trp : sc.triples)
            slots.emplace_back(trp, Envelope::power(sc.b_scale, sc.b_alpha));
        const Perturbation B = make_mixed_perturbation(A.scale, std::move(slots));
        std::vector<double> qv, muv;
        for (const auto& trp : sc.triples) {
            const auto se = holder_exponents(sc.p, sc.kappa, trp.r, trp.nu);
            if (!se) throw ParameterError("mixed scenario slots need r < p");
            qv.push_back(to_double(se->q));
            muv.push_back(to_double(se->mu));
        }
        const double c0 = measure_mixed_feedback_constant(A, {}, B, qv, muv, pd, kd, g,
                                                          SolverOptions{}, seed);
        return BudgetConstants{2.0 * std::max(c0, 1e-2), 1.0};
    }
    if (sc.name == "trace_l1") {
        const Perturbation B =
            make_trace_perturbation(A.scale, Envelope::power(sc.b_scale, sc.b_alpha), sc.p);
        const OperatorFamily A0 = A.autonomous && A.diagonal ? A : time_average(A, g->T());
        const double c0 =
            measure_transference_constant(A, A0, B, pd, g, SolverOptions{});
        return BudgetConstants{2.0 * std::max(c0, 1e-2), 1.0};
    }
    return std::nullopt;
}

} // namespace detail

/// A-priori estimate stability: for the scenario, the measured
/// data-to-solution constants are stable (15%) across spectral truncation,
/// across grid refinement and across batches of data draws; the constant is
/// exactly invariant under (u0, f) -> (c u0, c f); zero data solves to zero.
/// The mild scenario additionally holds its constant while the forcing spike
/// halves in width four times.
inline CheckReport check_energy_estimates(const EnergyScenario& sc,
                                          std::vector<std::size_t> dims = {16, 32, 64, 128},
                                          std::vector<std::size_t> levels = {128, 256, 512},
                                          int samples = 3, std::uint64_t seed = 503) {
    CheckReport rep;
    rep.name = "energy_" + sc.name;
    rep.seed = seed;
    rep.samples = samples;
    rep.params = {{"p", to_double(sc.p)}, {"kappa", to_double(sc.kappa)}, {"T", sc.T}};
    make_energy_scenario(sc.name);  // validates the scenario name

    const std::size_t n_mid = dims[dims.size() / 2];
    const std::size_t m_mid = levels[levels.size() / 2];
    std::vector<std::pair<std::size_t, std::size_t>> combos;
    for (std::size_t n : dims) combos.emplace_back(n, m_mid);
    for (std::size_t m : levels)
        if (m != m_mid) combos.emplace_back(n_mid, m);

    const int draws = std::max(samples, 2) + 2;
    std::vector<double> constants, seconds;
    double draw_stability = 0.0;
    for (std::size_t ci = 0; ci < combos.size(); ++ci) {
        const auto [n, m] = combos[ci];
        const OperatorFamily A = make_diagonal_heat(n, sc.T, to_double(sc.gamma_star));
        const GridPtr g = make_time_grid(sc.T, m);
        const auto bc = detail::energy_constants_for(sc, A, g, seed);
        Rng rng(seed + 977 * ci);
        double cmax = 0.0, chalf = 0.0, smax = 0.0;
        for (int d = 0; d < draws; ++d) {
            const auto dr = detail::energy_draw(sc, A, g, d, rng, 1.0);
            double second = 0.0;
            const double c = detail::energy_constant(sc, A, g, dr, bc, &second);
            cmax = std::max(cmax, c);
            smax = std::max(smax, second);
            if (d < (draws + 1) / 2) chalf = std::max(chalf, c);
        }
        draw_stability = std::max(draw_stability, (cmax - chalf) / cmax);
        constants.push_back(cmax);
        if (smax > 0.0) seconds.push_back(smax);
        rep.ratios.push_back(cmax);
        rep.metrics["c_n" + std::to_string(n) + "_m" + std::to_string(m)] = cmax;
    }

    // Scaling invariance and the zero-data solve, at the central combo.
    double scaling_err = 0.0, zero_norm = 0.0;
    {
        const OperatorFamily A = make_diagonal_heat(n_mid, sc.T, to_double(sc.gamma_star));
        const GridPtr g = make_time_grid(sc.T, m_mid);
        const auto bc = detail::energy_constants_for(sc, A, g, seed);
        Rng rng1(seed + 19), rng2(seed + 19);
        const auto d1 = detail::energy_draw(sc, A, g, 2, rng1, 1.0);
        const auto d3 = detail::energy_draw(sc, A, g, 2, rng2, 3.0);
        const double c1 = detail::energy_constant(sc, A, g, d1, bc, nullptr);
        const double c3 = detail::energy_constant(sc, A, g, d3, bc, nullptr);
        scaling_err = std::abs(c3 / c1 - 1.0);

        detail::EnergyDraw zero;
        zero.u0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_mid));
        zero.f = make_inhomogeneity(A.scale, {});
        zero.rhs = 1.0;
        zero_norm = detail::energy_constant(sc, A, g, zero, bc, nullptr);
    }
    rep.metrics["scaling_err"] = scaling_err;
    rep.metrics["zero_data_norm"] = zero_norm;

    // Spike robustness for the mild scenario: the bottom-mode spike draw
    // halves in width four times at fixed unit mass. Every width sits far
    // below that mode's relaxation time 1/lambda, so the measured constant
    // already equals its jump-response limit and must hold still; a fast-mode
    // spike at these widths would measure its own sharpening transient
    // instead of the estimate's constant.
    double spike_spread = 0.0;
    if (sc.name == "mild_l1") {
        const OperatorFamily A = make_diagonal_heat(n_mid, sc.T, to_double(sc.gamma_star));
        const GridPtr g = make_time_grid(sc.T, levels.back());
        std::vector<double> cs;
        EnergyScenario sw = sc;
        for (int h = 0; h <= 4; ++h) {
            Rng rng(seed + 7);
            auto dr = detail::energy_draw(sw, A, g, 0, rng, 1.0);
            cs.push_back(detail::energy_constant(sw, A, g, dr, std::nullopt, nullptr));
            sw.spike_width *= 0.5;
        }
        spike_spread = detail::rel_spread(cs);
        rep.metrics["spike_spread"] = spike_spread;
    }

    const double spread = detail::rel_spread(constants);
    const double second_spread = detail::rel_spread(seconds);
    rep.metrics["combo_spread"] = spread;
    rep.metrics["draw_stability"] = draw_stability;
    if (!seconds.empty()) rep.metrics["decomposed_norm_spread"] = second_spread;
    rep.pass = detail::all_finite(rep.ratios) && spread <= 0.15 && second_spread <= 0.15 &&
               draw_stability <= 0.15 && scaling_err <= 1e-8 && zero_norm <= 1e-10 &&
               spike_spread <= 0.15;
    return rep;
}

/// Criticality sweep configuration: the envelope family t^{-a+eps} walks
/// toward the integrability boundary of its budget class as eps drops.
struct CriticalityConfig {
    int section = 2;
    std::vector<double> offsets = {0.2, 0.1, 0.05, 0.025};
    std::size_t n = 8;
    std::size_t m = 384;
    double T = 1.0;
    Rat p = Rat(2);
    Rat kappa = Rat(0);
    Rat gamma_star = Rat(1);
    Rat q = Rat(4);
    ExponentTriple triple{Rat(4, 3), Rat(0), Rat(1, 2)};
    double b_scale = 1.0;
};

/// Boundary behaviour of the envelope budget: at eps = 0 the envelope leaves
/// its class and is rejected before any solve; for eps decreasing toward 0 the
/// partition count N(eps) and the data-to-solution ratio are monotonically
/// nondecreasing, N obeys 2 + (||b||/budget)^{q_b} on every run, and the
/// log-ratio against ||b||^{q_b} is reported with its linear-fit R^2.
inline CheckReport criticality_experiment(const CriticalityConfig& cfg,
                                          std::uint64_t seed = 701) {
    if (cfg.section != 2 && cfg.section != 3 && cfg.section != 4)
        throw ParameterError("criticality experiment supports sections 2, 3 and 4");
    if (cfg.offsets.empty()) throw InvalidInputError("criticality sweep needs offsets");
    std::vector<double> offs = cfg.offsets;
    std::sort(offs.begin(), offs.end(), std::greater<>());
    for (double e : offs)
        if (!(e > 0.0)) throw ParameterError("offsets must be positive");

    CheckReport rep;
    rep.name = "criticality";
    rep.seed = seed;
    rep.samples = static_cast<int>(offs.size());
    const double pd = to_double(cfg.p), kd = to_double(cfg.kappa);
    rep.params = {{"section", static_cast<double>(cfg.section)},
                  {"p", pd},
                  {"kappa", kd},
                  {"n", static_cast<double>(cfg.n)},
                  {"T", cfg.T}};

    const OperatorFamily A = make_diagonal_heat(cfg.n, cfg.T, to_double(cfg.gamma_star));
    const GridPtr g = make_time_grid(cfg.T, cfg.m);
    const HilbertScale& S = *A.scale;

    // Envelope class of the section: (exponent, weight) the family must obey.
    double qb = 0.0, mub = 0.0;
    if (cfg.section == 2) {
        qb = to_double(cfg.q);
    } else if (cfg.section == 3) {
        const auto se = holder_exponents(cfg.p, cfg.kappa, cfg.triple.r, cfg.triple.nu);
        if (!se) throw ParameterError("critical slot r = p has no envelope family");
        qb = to_double(se->q);
        mub = to_double(se->mu);
    } else {
        qb = pd / (pd - 1.0);
    }
    const double alpha_crit = (1.0 + mub) / qb;
    const auto envelope_at = [&](double eps) {
        return Envelope::power(cfg.b_scale, alpha_crit - eps);
    };

    // Positive separable data, zero initial value; the attenuating coupling
    // (sign -1 with plain backward-Euler inner solves) makes the solution
    // pointwise monotone in the envelope.
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(cfg.n));
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cfg.n));
    SolverOptions opts;
    opts.richardson = false;

    const auto perturb_at = [&](double eps) {
        if (cfg.section == 2) return make_lq_perturbation(A.scale, envelope_at(eps), cfg.q, -1.0);
        if (cfg.section == 3)
            return make_mixed_perturbation(A.scale, {{cfg.triple, envelope_at(eps)}}, -1.0);
        return make_trace_perturbation(A.scale, envelope_at(eps), cfg.p, -1.0);
    };
    const auto forcing = [&]() {
        std::vector<ForcingComponent> comps;
        comps.push_back(ForcingComponent::separable(ForcingSlot::base(pd, kd),
                                                    Envelope::constant(1.0), ones));
        return make_inhomogeneity(A.scale, std::move(comps));
    }();
    const double fnorm = forcing.sum_norm_upper(0.0, cfg.T);

    // Supercritical rejection: at eps = 0 the envelope leaves its class and
    // both the partition walk and the solver refuse before any solve.
    bool rejected = false, partition_rejected = false;
    try {
        if (cfg.section == 2)
            picard_solve(A, perturb_at(0.0), forcing, zero, pd, kd, BudgetConstants{}, g, opts);
        else if (cfg.section == 3)
            mixed_scale_solve(A, {}, perturb_at(0.0), forcing, zero,
                              MixedExponents{cfg.p, cfg.kappa, cfg.gamma_star}, g, opts);
        else
            transference_solve(A, std::nullopt, perturb_at(0.0), forcing, zero, pd, g, opts);
    } catch (const EnvelopeClassError&) {
        rejected = true;
    }
    try {
        partition_by_budget(envelope_at(0.0), qb, mub, cfg.T, 0.25);
    } catch (const EnvelopeClassError&) {
        partition_rejected = true;
    }
    rep.metrics["rejected_at_zero"] = rejected && partition_rejected ? 1.0 : 0.0;

    // Shared budget constants, measured once at the tamest envelope so the
    // partition budget is identical across the sweep.
    std::optional<BudgetConstants> shared;
    std::vector<double> ns, ratios, bnorms;
    bool n_bounded = true;
    for (double eps : offs) {
        const Perturbation B = perturb_at(eps);
        SolveReport r = [&] {
            if (cfg.section == 2) {
                if (!shared) {
                    double c0 = 0.0;
                    const auto& pc = B.comps.front();
                    const double btot = pc.b.class_norm(qb, mub, 0.0, cfg.T);
                    for (const auto& v : probe_functions(g, S)) {
                        const double den = btot * mr_norm(v, pd, kd, S);
                        if (!(den > 0.0)) continue;
                        const double num = time_lq_norm_fn(
                            [&](double t) { return B.apply(t, v.eval(t)); }, pd, kd,
                            SpaceLevel::power(0.0), S, *g);
                        c0 = std::max(c0, num / den);
                    }
                    const MrEstimate est = estimate_mr_constant(A, pd, kd, g, 6, seed);
                    shared = BudgetConstants{2.0 * std::max(c0, 1e-2), est.value};
                }
                return picard_solve(A, B, forcing, zero, pd, kd, *shared, g, opts);
            }
            SolverOptions o2 = opts;
            o2.constants_override = shared;
            if (cfg.section == 3) {
                auto r3 = mixed_scale_solve(A, {}, B, forcing, zero,
                                            MixedExponents{cfg.p, cfg.kappa, cfg.gamma_star}, g,
                                            o2);
                if (!shared) shared = BudgetConstants{r3.constants.at("C0"), 1.0};
                return r3;
            }
            auto r4 = transference_solve(A, std::nullopt, B, forcing, zero, pd, g, o2);
            if (!shared) shared = BudgetConstants{r4.constants.at("C0"), 1.0};
            return r4;
        }();
        const double N = r.constants.at("intervals");
        const double budget = r.constants.at("budget");
        const double bnorm = B.comps.front().b.class_norm(qb, mub, 0.0, cfg.T);
        const double bound = 2.0 + std::pow(bnorm / budget, qb);
        if (N > bound + 1e-9) n_bounded = false;
        ns.push_back(N);
        bnorms.push_back(bnorm);
        ratios.push_back(r.norms.at("lp_x1") / fnorm);
        rep.ratios.push_back(ratios.back());
        rep.metrics["N_eps" + std::to_string(ns.size())] = N;
    }

    bool n_monotone = true, ratio_monotone = true;
    for (std::size_t i = 1; i < ns.size(); ++i) {
        if (ns[i] + 1e-9 < ns[i - 1]) n_monotone = false;
        if (ratios[i] < ratios[i - 1] - 1e-8) ratio_monotone = false;
    }
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        xs.push_back(std::pow(bnorms[i], qb));
        ys.push_back(std::log(ratios[i]));
    }
    rep.metrics["log_ratio_fit_r2"] = detail::linear_fit_r2(xs, ys);
    rep.metrics["n_final"] = ns.back();
    rep.pass = rejected && partition_rejected && n_monotone && ratio_monotone && n_bounded &&
               detail::all_finite(rep.ratios);
    return rep;
}

/// Cross-check configuration: one problem family solved several independent
/// ways per seed.
struct CrosscheckConfig {
    std::string scheme = "picard";  // picard | mixed | transference
    std::size_t n = 8;
    std::size_t m = 256;
    double T = 1.0;
    Rat p = Rat(2);
    Rat kappa = Rat(0);
    Rat gamma_star = Rat(1);
    Rat q = Rat(4);
    std::vector<ExponentTriple> triples = {ExponentTriple{Rat(4, 3), Rat(0), Rat(1, 2)}};
    bool with_aux = false;
    double b_scale = 0.25;
    double b_alpha = 0.125;
    int seeds = 20;
    double tol = 1e-5;
};

/// Uniqueness and decomposition invariance: per seed, the direct dense solve,
/// the interval scheme, and the interval scheme restarted from a random
/// initial iterate must agree pairwise within 10 tol (relative, in the
/// L^p(w_kappa; X_1) norm); for schemes with several forcing slots, shifting
/// mass between slots of the same f leaves the solution inside the same band.
inline CheckReport uniqueness_crosscheck(const CrosscheckConfig& cfg, std::uint64_t seed = 601) {
    if (cfg.scheme != "picard" && cfg.scheme != "mixed" && cfg.scheme != "transference")
        throw InvalidInputError("unknown crosscheck scheme: " + cfg.scheme);
    if (cfg.seeds < 1) throw ParameterError("crosscheck needs at least one seed");

    CheckReport rep;
    rep.name = "uniqueness_crosscheck";
    rep.seed = seed;
    rep.samples = cfg.seeds;
    const double pd = to_double(cfg.p), kd = to_double(cfg.kappa);
    rep.params = {{"p", pd},
                  {"kappa", kd},
                  {"n", static_cast<double>(cfg.n)},
                  {"m", static_cast<double>(cfg.m)},
                  {"tol", cfg.tol}};

    const OperatorFamily A = make_diagonal_heat(cfg.n, cfg.T, to_double(cfg.gamma_star));
    const GridPtr g = make_time_grid(cfg.T, cfg.m);
    const HilbertScale& S = *A.scale;
    const SpaceLevel x1 = SpaceLevel::power(1.0);

    const Perturbation B = [&] {
        const Envelope env = Envelope::power(cfg.b_scale, cfg.b_alpha);
        if (cfg.scheme == "picard") return make_lq_perturbation(A.scale, env, cfg.q);
        if (cfg.scheme == "mixed") {
            std::vector<std::pair<ExponentTriple, Envelope>> slots;
            for (const auto& tr : cfg.triples) slots.emplace_back(tr, env);
            return make_mixed_perturbation(A.scale, std::move(slots));
        }
        return make_trace_perturbation(A.scale, env, cfg.p);
    }();
    const std::vector<OperatorFamily> aux = [&]() -> std::vector<OperatorFamily> {
        if (cfg.scheme != "mixed" || !cfg.with_aux) return {};
        OperatorFamily shifted = A;
        shifted.diag_base *= 1.25;
        shifted.mat_base *= 1.25;
        return {shifted};
    }();
    const MixedExponents ex{cfg.p, cfg.kappa, cfg.gamma_star};

    const auto scheme_solve = [&](const Inhomogeneity& f, const Eigen::VectorXd& u0,
                                  SolverOptions opts) {
        if (cfg.scheme == "picard")
            return picard_solve(A, B, f, u0, pd, kd, BudgetConstants{1.0, 1.0}, g, opts);
        if (cfg.scheme == "mixed") return mixed_scale_solve(A, aux, B, f, u0, ex, g, opts);
        return transference_solve(A, std::nullopt, B, f, u0, pd, g, opts);
    };
    const auto rel_dist = [&](const GridFunction& a, const GridFunction& b) {
        const double den = std::max(time_lq_norm(a, pd, kd, x1, S), 1e-12);
        return lp_distance(a, b.on_grid(a.grid_ptr()), pd, kd, x1, S) / den;
    };

    double worst = 0.0, worst_shift = 0.0;
    for (int sidx = 0; sidx < cfg.seeds; ++sidx) {
        Rng rng(seed + 7919 * static_cast<std::uint64_t>(sidx));
        // Data: random trace-normalized u0 plus one random in-class component
        // per slot the scheme prices.
        Eigen::VectorXd u0 = randn_vector(rng, cfg.n);
        u0 /= std::max(S.level_norm(u0, SpaceLevel::interp(1.0 - (1.0 + kd) / pd, pd)), 1e-12);
        std::vector<ForcingComponent> comps;
        comps.push_back(ForcingComponent::separable(ForcingSlot::base(pd, kd),
                                                    Envelope::constant(1.0),
                                                    randn_vector(rng, cfg.n)));
        if (cfg.scheme == "mixed") {
            int ri = 1;
            for (const auto& tr : cfg.triples)
                comps.push_back(ForcingComponent::separable(ForcingSlot::rung(ri++, tr),
                                                            Envelope::constant(1.0),
                                                            randn_vector(rng, cfg.n)));
        } else if (cfg.scheme == "transference") {
            comps.push_back(ForcingComponent::separable(ForcingSlot::l1_trace(pd),
                                                        Envelope::constant(1.0),
                                                        randn_vector(rng, cfg.n)));
        }
        const Inhomogeneity f = make_inhomogeneity(A.scale, comps);

        const GridFunction direct = oracle_solve(A, B, f, u0, g);
        SolverOptions opts;
        const SolveReport ra = scheme_solve(f, u0, opts);
        opts.initial_guess_seed = seed ^ (0x9e3779b97f4a7c15ull + 31 * sidx);
        const SolveReport rb = scheme_solve(f, u0, opts);

        const double d_ab = rel_dist(direct, ra.trajectory);
        const double d_ac = rel_dist(direct, rb.trajectory);
        const double d_bc = rel_dist(ra.trajectory, rb.trajectory);
        worst = std::max({worst, d_ab, d_ac, d_bc});
        rep.ratios.push_back(std::max({d_ab, d_ac, d_bc}));

        // Decomposition invariance: move half of the base component into
        // another slot of the same f; the solution may not care.
        if (cfg.scheme != "picard") {
            std::vector<ForcingComponent> shifted;
            const Eigen::VectorXd dir = 0.5 * f.comps.front().eval(0.0);
            shifted.push_back(ForcingComponent::separable(ForcingSlot::base(pd, kd),
                                                          Envelope::constant(1.0), dir));
            const ForcingSlot other = cfg.scheme == "mixed"
                                          ? ForcingSlot::rung(1, cfg.triples.front())
                                          : ForcingSlot::l1_trace(pd);
            shifted.push_back(
                ForcingComponent::separable(other, Envelope::constant(1.0), dir));
            for (std::size_t i = 1; i < f.comps.size(); ++i) shifted.push_back(f.comps[i]);
            const SolveReport rs = scheme_solve(make_inhomogeneity(A.scale, shifted), u0,
                                                SolverOptions{});
            worst_shift = std::max(worst_shift, rel_dist(ra.trajectory, rs.trajectory));
        }
    }

    rep.metrics["worst_pairwise"] = worst;
    if (cfg.scheme != "picard") rep.metrics["worst_decomposition_shift"] = worst_shift;
    rep.pass = detail::all_finite(rep.ratios) && worst <= 10.0 * cfg.tol &&
               worst_shift <= 10.0 * cfg.tol;
    return rep;
}

} // namespace parreg
