#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "parreg/config.hpp"
#include "parreg/report.hpp"
#include "parreg/solver.hpp"
#include "parreg/verify.hpp"

namespace parreg {

struct RunOptions {
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
    int jobs = 1;  // accepted for interface compatibility; execution is sequential
};

struct JobResult {
    std::string name;
    bool pass = false;
    Json report;
};

struct RunSummary {
    std::vector<JobResult> jobs;
    bool all_pass = true;
    int exit_code = 0;
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline bool match_indexed(const std::string& key, const std::string& pre,
                          const std::string& suf) {
    if (key.size() <= pre.size() + suf.size()) return false;
    if (key.compare(0, pre.size(), pre) != 0) return false;
    if (key.compare(key.size() - suf.size(), suf.size(), suf) != 0) return false;
    for (std::size_t i = pre.size(); i + suf.size() < key.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(key[i]))) return false;
    return true;
}

inline void validate_keys(const Config& cfg) {
    static const std::vector<std::string> exact = {
        "seed", "tol", "jobs",
        "problem.model", "problem.n", "problem.T", "problem.gamma_star", "problem.lambda",
        "problem.coupling", "problem.profile.kind", "problem.profile.value",
        "problem.profile.breaks", "problem.profile.values",
        "exponents.p", "exponents.kappa",
        "grid.m", "grid.grading",
        "perturb.kind", "perturb.sign", "perturb.q",
        "perturb.b.kind", "perturb.b.scale", "perturb.b.alpha",
        "mixed.aux", "mixed.aux_factor",
        "solver.tol", "solver.max_iter", "solver.richardson",
        "init.kind", "init.mode", "init.scale",
        "check.samples", "check.levels", "check.horizons", "check.dims",
        "criticality.section", "criticality.offsets",
        "uniqueness.scheme", "uniqueness.seeds",
        "holder.p", "holder.q", "holder.r", "holder.kappa", "holder.nu",
    };
    static const std::vector<std::pair<std::string, std::string>> indexed = {
        {"perturb.slot", ".r"},       {"perturb.slot", ".nu"},
        {"perturb.slot", ".gamma"},   {"perturb.slot", ".beta"},
        {"perturb.slot", ".b.kind"},  {"perturb.slot", ".b.scale"},
        {"perturb.slot", ".b.alpha"}, {"forcing.comp", ".slot"},
        {"forcing.comp", ".kind"},    {"forcing.comp", ".scale"},
        {"forcing.comp", ".alpha"},   {"forcing.comp", ".t0"},
        {"forcing.comp", ".width"},   {"forcing.comp", ".mode"},
    };
    for (const auto& [key, val] : cfg.entries()) {
        (void)val;
        if (std::find(exact.begin(), exact.end(), key) != exact.end()) continue;
        bool ok = false;
        for (const auto& [pre, suf] : indexed)
            if (match_indexed(key, pre, suf)) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("unknown config key '" + key + "'");
    }
}

inline Envelope build_envelope(const Config& cfg, const std::string& prefix, double def_scale,
                               double def_alpha) {
    const std::string kind = cfg.get_string(prefix + ".kind", "constant");
    const double scale = cfg.get_double(prefix + ".scale", def_scale);
    const double alpha = cfg.get_double(prefix + ".alpha", def_alpha);
    if (kind == "zero") return Envelope::zero();
    if (kind == "constant") return Envelope::constant(scale);
    if (kind == "power") return Envelope::power(scale, alpha);
    throw ConfigError("key '" + prefix + ".kind': unknown envelope kind '" + kind + "'");
}

inline OperatorFamily build_family(const Config& cfg) {
    const std::string model = cfg.get_string("problem.model", "heat");
    const std::size_t n = static_cast<std::size_t>(cfg.get_int("problem.n", 8));
    const double T = cfg.get_double("problem.T", 1.0);
    const double gs = to_double(cfg.get_rat("problem.gamma_star", Rat(1)));
    OperatorFamily A = [&] {
        if (model == "heat") return make_diagonal_heat(n, T, gs);
        if (model == "scalar")
            return make_scalar_family(cfg.get_double_list("problem.lambda", {1.0}), T, gs);
        if (model == "jordan")
            return make_jordan_family(n, cfg.get_double("problem.coupling", 0.5), T, gs);
        throw ConfigError("key 'problem.model': unknown model '" + model + "'");
    }();
    const std::string pk = cfg.get_string("problem.profile.kind", "constant");
    if (pk == "constant") {
        const double c = cfg.get_double("problem.profile.value", 1.0);
        if (c != 1.0) A = make_nonautonomous(A, Envelope::constant(c), c, c);
    } else if (pk == "piecewise") {
        const auto breaks = cfg.get_double_list("problem.profile.breaks");
        const auto values = cfg.get_double_list("problem.profile.values");
        const Envelope prof = Envelope::piecewise(breaks, values);
        double lo = values.front(), hi = values.front();
        for (double v : values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        A = make_nonautonomous(A, prof, lo, hi);
    } else {
        throw ConfigError("key 'problem.profile.kind': unknown profile '" + pk + "'");
    }
    return A;
}

inline std::vector<ExponentTriple> build_triples(const Config& cfg) {
    std::vector<ExponentTriple> out;
    for (int i = 1;; ++i) {
        const std::string pre = "perturb.slot" + std::to_string(i);
        if (!cfg.has(pre + ".r")) break;
        out.push_back(ExponentTriple{cfg.get_rat(pre + ".r", Rat(4, 3)),
                                     cfg.get_rat(pre + ".nu", Rat(0)),
                                     cfg.get_rat(pre + ".gamma", Rat(1, 2)),
                                     cfg.get_rat(pre + ".beta", Rat(1))});
    }
    if (out.empty()) out.push_back(ExponentTriple{Rat(4, 3), Rat(0), Rat(1, 2), Rat(1)});
    return out;
}

inline Perturbation build_perturbation(const Config& cfg, const ScalePtr& scale, const Rat& p) {
    const std::string kind = cfg.get_string("perturb.kind", "none");
    const double sign = cfg.get_double("perturb.sign", 1.0);
    if (kind == "none") return make_no_perturbation(scale);
    if (kind == "lq")
        return make_lq_perturbation(scale, build_envelope(cfg, "perturb.b", 0.5, 0.0),
                                    cfg.get_rat("perturb.q", Rat(4)), sign);
    if (kind == "mixed") {
        std::vector<std::pair<ExponentTriple, Envelope>> slots;
        const auto triples = build_triples(cfg);
        for (std::size_t i = 0; i < triples.size(); ++i) {
            const std::string pre = "perturb.slot" + std::to_string(i + 1) + ".b";
            slots.emplace_back(triples[i], build_envelope(cfg, pre, 0.5, 0.0));
        }
        return make_mixed_perturbation(scale, std::move(slots), sign);
    }
    if (kind == "trace")
        return make_trace_perturbation(scale, build_envelope(cfg, "perturb.b", 0.5, 0.0), p,
                                       sign);
    throw ConfigError("key 'perturb.kind': unknown kind '" + kind + "'");
}

inline Eigen::VectorXd mode_direction(std::size_t n, long mode) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    if (mode == 0) return Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    if (mode < 1 || static_cast<std::size_t>(mode) > n)
        throw ConfigError("forcing/init mode index out of range");
    v[static_cast<Eigen::Index>(mode - 1)] = 1.0;
    return v;
}

inline Inhomogeneity build_forcing(const Config& cfg, const ScalePtr& scale, double T, double pd,
                                   double kd, const std::vector<ExponentTriple>& triples) {
    std::vector<ForcingComponent> comps;
    for (int i = 1;; ++i) {
        const std::string pre = "forcing.comp" + std::to_string(i);
        if (!cfg.has(pre + ".slot") && !cfg.has(pre + ".kind")) break;
        const std::string slot_name = cfg.get_string(pre + ".slot", "base");
        const ForcingSlot slot = [&] {
            if (slot_name == "base") return ForcingSlot::base(pd, kd);
            if (slot_name == "l1_trace") return ForcingSlot::l1_trace(pd);
            if (slot_name.rfind("rung", 0) == 0) {
                const std::size_t j =
                    static_cast<std::size_t>(std::stol(slot_name.substr(4)));
                if (j < 1 || j > triples.size())
                    throw ConfigError("key '" + pre + ".slot': rung index out of range");
                return ForcingSlot::rung(static_cast<int>(j), triples[j - 1]);
            }
            throw ConfigError("key '" + pre + ".slot': unknown slot '" + slot_name + "'");
        }();
        const std::string kind = cfg.get_string(pre + ".kind", "constant");
        const double scl = cfg.get_double(pre + ".scale", 1.0);
        Eigen::VectorXd dir = mode_direction(scale->dim(), cfg.get_int(pre + ".mode", 1));
        if (kind == "spike") {
            const Envelope prof = Envelope::spike(cfg.get_double(pre + ".t0", 0.05 * T),
                                                  cfg.get_double(pre + ".width", 4e-3 * T));
            comps.push_back(ForcingComponent::separable(slot, prof, scl * dir));
        } else if (kind == "constant" || kind == "power") {
            const Envelope prof = kind == "constant"
                                      ? Envelope::constant(scl)
                                      : Envelope::power(scl, cfg.get_double(pre + ".alpha", 0.0));
            comps.push_back(ForcingComponent::separable(slot, prof, dir));
        } else {
            throw ConfigError("key '" + pre + ".kind': unknown forcing kind '" + kind + "'");
        }
    }
    if (comps.empty())
        comps.push_back(ForcingComponent::separable(ForcingSlot::base(pd, kd),
                                                    Envelope::constant(1.0),
                                                    mode_direction(scale->dim(), 1)));
    return make_inhomogeneity(scale, std::move(comps));
}

inline Eigen::VectorXd build_init(const Config& cfg, const ScalePtr& scale) {
    const std::string kind = cfg.get_string("init.kind", "zero");
    if (kind == "zero")
        return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(scale->dim()));
    if (kind == "mode")
        return cfg.get_double("init.scale", 1.0) *
               mode_direction(scale->dim(), cfg.get_int("init.mode", 1));
    throw ConfigError("key 'init.kind': unknown kind '" + kind + "'");
}

inline SolverOptions build_solver_options(const Config& cfg) {
    SolverOptions opts;
    opts.tol = cfg.get_double("solver.tol", 1e-10);
    opts.max_iter = static_cast<int>(cfg.get_int("solver.max_iter", 60));
    opts.richardson = cfg.get_bool("solver.richardson", true);
    return opts;
}

inline BudgetConstants measure_lq_constants(const OperatorFamily& A, const Perturbation& B,
                                            double pd, double kd, const GridPtr& g,
                                            std::uint64_t seed) {
    const auto& pc = B.comps.front();
    const double q = to_double(pc.q_class);
    const double btot = pc.b.is_zero() ? 0.0 : pc.b.class_norm(q, 0.0, 0.0, g->T());
    double c0 = 0.0;
    if (btot > 0.0)
        for (const auto& v : probe_functions(g, *A.scale)) {
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

inline std::vector<std::size_t> to_sizes(const std::vector<long>& v) {
    std::vector<std::size_t> out;
    for (long x : v) out.push_back(static_cast<std::size_t>(x));
    return out;
}

inline Json execute_job(const std::string& job, const Config& cfg, std::uint64_t job_seed,
                        double cmp_tol) {
    const Rat p = cfg.get_rat("exponents.p", Rat(2));
    const Rat kappa = cfg.get_rat("exponents.kappa", Rat(0));
    const Rat gamma_star = cfg.get_rat("problem.gamma_star", Rat(1));
    const double pd = to_double(p), kd = to_double(kappa);
    const double T = cfg.get_double("problem.T", 1.0);
    const std::size_t m = static_cast<std::size_t>(cfg.get_int("grid.m", 256));
    const double grading = cfg.get_double("grid.grading", 3.0);
    const int samples = static_cast<int>(cfg.get_int("check.samples", 6));
    const auto levels_cfg = cfg.get_int_list("check.levels");
    const auto horizons = cfg.get_double_list("check.horizons", {0.25, 1.0, 4.0});

    std::map<std::string, double> params = {
        {"p", pd},
        {"kappa", kd},
        {"T", T},
        {"n", static_cast<double>(cfg.get_int("problem.n", 8))},
        {"m", static_cast<double>(m)},
        {"grading", grading},
    };

    if (job == "solve" || job == "gronwall") {
        const OperatorFamily A = build_family(cfg);
        const GridPtr grid = make_time_grid(T, m, grading);
        const auto triples = build_triples(cfg);
        const Perturbation B = build_perturbation(cfg, A.scale, p);
        const Inhomogeneity f = build_forcing(cfg, A.scale, T, pd, kd, triples);
        const Eigen::VectorXd u0 = build_init(cfg, A.scale);
        const SolverOptions opts = build_solver_options(cfg);
        const std::string kind = cfg.get_string("perturb.kind", "none");

        if (job == "gronwall") {
            const GronwallReport rep =
                gronwall_check(A, B, f, pd, kd, grid, std::max(samples, 4), job_seed);
            return gronwall_report_json(job, rep, params, job_seed);
        }
        if (kind == "none") {
            const GridFunction u = oracle_solve(A, B, f, u0, grid);
            SolveReport rep(u);
            rep.scheme = "direct";
            rep.residual_tol = opts.tol;
            rep.norms["lp_x1"] =
                weighted_lp_norm(u, pd, kd, SpaceLevel::power(1.0), *A.scale);
            rep.norms["w1p_x0"] = w1p_norm(u, pd, kd, SpaceLevel::power(0.0), *A.scale);
            rep.norms["mr"] = std::max(rep.norms["lp_x1"], rep.norms["w1p_x0"]);
            return solve_report_json(job, rep, params, job_seed);
        }
        if (kind == "lq") {
            const BudgetConstants bc = measure_lq_constants(A, B, pd, kd, grid, job_seed);
            return solve_report_json(
                job, picard_solve(A, B, f, u0, pd, kd, bc, grid, opts), params, job_seed);
        }
        if (kind == "mixed") {
            std::vector<OperatorFamily> aux;
            if (cfg.get_string("mixed.aux", "none") == "shifted") {
                OperatorFamily shifted = A;
                const double fac = cfg.get_double("mixed.aux_factor", 1.25);
                shifted.diag_base *= fac;
                shifted.mat_base *= fac;
                aux.push_back(std::move(shifted));
            }
            const MixedExponents ex{p, kappa, gamma_star};
            return solve_report_json(
                job, mixed_scale_solve(A, aux, B, f, u0, ex, grid, opts), params, job_seed);
        }
        return solve_report_json(
            job, transference_solve(A, std::nullopt, B, f, u0, pd, grid, opts), params,
            job_seed);
    }

    if (job == "check.trace_embedding") {
        const OperatorFamily A = build_family(cfg);
        const auto levels = levels_cfg.empty() ? std::vector<std::size_t>{96, 192, 384}
                                               : to_sizes(levels_cfg);
        return check_report_json(
            job, check_trace_embedding(A.scale, pd, kd, levels, horizons, samples, job_seed),
            job_seed);
    }
    if (job == "check.perturbation_estimate") {
        const OperatorFamily A = build_family(cfg);
        const Perturbation B = build_perturbation(cfg, A.scale, p);
        const auto levels = levels_cfg.empty() ? std::vector<std::size_t>{128, 256, 384}
                                               : to_sizes(levels_cfg);
        return check_report_json(
            job,
            check_perturbation_estimate(B, pd, kd, levels, horizons,
                                        std::min(samples, 5), job_seed),
            job_seed);
    }
    if (job == "check.weighted_holder") {
        return check_report_json(
            job,
            check_weighted_holder(cfg.get_double("holder.p", 4.0),
                                  cfg.get_double("holder.q", 4.0),
                                  cfg.get_double("holder.r", 2.0),
                                  cfg.get_double("holder.kappa", 0.0),
                                  cfg.get_double("holder.nu", 0.0), samples, job_seed),
            job_seed);
    }
    if (job == "check.mixed_embedding") {
        const OperatorFamily A = build_family(cfg);
        const auto triples = build_triples(cfg);
        const auto levels = levels_cfg.empty() ? std::vector<std::size_t>{96, 192, 384}
                                               : to_sizes(levels_cfg);
        return check_report_json(
            job,
            check_mixed_embedding(A.scale, p, kappa, gamma_star, triples.front(), levels,
                                  horizons, samples, job_seed),
            job_seed);
    }
    if (job.rfind("check.energy.", 0) == 0) {
        EnergyScenario sc = make_energy_scenario(job.substr(std::string("check.energy.").size()));
        sc.T = T;
        const auto dims = [&] {
            const auto d = cfg.get_int_list("check.dims");
            return d.empty() ? std::vector<std::size_t>{16, 32, 64, 128} : to_sizes(d);
        }();
        const auto levels = levels_cfg.empty() ? std::vector<std::size_t>{128, 256, 512}
                                               : to_sizes(levels_cfg);
        return check_report_json(
            job, check_energy_estimates(sc, dims, levels, std::min(samples, 4), job_seed),
            job_seed);
    }
    if (job == "check.criticality") {
        CriticalityConfig cc;
        cc.section = static_cast<int>(cfg.get_int("criticality.section", 2));
        cc.offsets = cfg.get_double_list("criticality.offsets", {0.2, 0.1, 0.05, 0.025});
        cc.n = static_cast<std::size_t>(cfg.get_int("problem.n", 8));
        cc.m = m;
        cc.T = T;
        cc.p = p;
        cc.kappa = kappa;
        cc.gamma_star = gamma_star;
        cc.q = cfg.get_rat("perturb.q", Rat(4));
        cc.triple = build_triples(cfg).front();
        cc.b_scale = cfg.get_double("perturb.b.scale", 1.0);
        return check_report_json(job, criticality_experiment(cc, job_seed), job_seed);
    }
    if (job == "check.uniqueness") {
        CrosscheckConfig uc;
        const std::string kind = cfg.get_string("perturb.kind", "lq");
        uc.scheme = cfg.get_string("uniqueness.scheme",
                                   kind == "mixed"       ? "mixed"
                                   : kind == "trace"     ? "transference"
                                                         : "picard");
        uc.n = static_cast<std::size_t>(cfg.get_int("problem.n", 8));
        uc.m = m;
        uc.T = T;
        uc.p = p;
        uc.kappa = kappa;
        uc.gamma_star = gamma_star;
        uc.q = cfg.get_rat("perturb.q", Rat(4));
        uc.triples = build_triples(cfg);
        uc.with_aux = cfg.get_string("mixed.aux", "none") != "none";
        uc.b_scale = cfg.get_double("perturb.b.scale", 0.25);
        uc.b_alpha = cfg.get_double("perturb.b.alpha", 0.125);
        uc.seeds = static_cast<int>(cfg.get_int("uniqueness.seeds", 20));
        uc.tol = cmp_tol;
        return check_report_json(job, uniqueness_crosscheck(uc, job_seed), job_seed);
    }
    throw ConfigError("unknown job '" + job + "'");
}

inline std::string job_file_name(const std::string& job) {
    std::string s = job;
    for (char& c : s)
        if (c == '.') c = '_';
    return s + ".json";
}

/// Up-front validation beyond key names: referenced triples must be
/// admissible, with the failed clauses named in the error.
inline void validate_semantics(const Config& cfg) {
    const std::string kind = cfg.get_string("perturb.kind", "none");
    const bool uses_triples =
        kind == "mixed" || [&] {
            for (const auto& j : cfg.get_string_list("jobs"))
                if (j == "check.mixed_embedding" || j == "check.uniqueness") return true;
            return false;
        }();
    if (!uses_triples) return;
    const Rat p = cfg.get_rat("exponents.p", Rat(2));
    const Rat kappa = cfg.get_rat("exponents.kappa", Rat(0));
    const Rat gs = cfg.get_rat("problem.gamma_star", Rat(1));
    for (const auto& tr : build_triples(cfg)) {
        const auto v = is_admissible(p, kappa, gs, tr);
        if (!v.admissible)
            throw ConfigError("inadmissible exponent triple: " + v.reason());
    }
}

} // namespace detail

inline RunSummary run_config(const Config& cfg, const RunOptions& opt) {
    detail::validate_keys(cfg);
    detail::validate_semantics(cfg);
    std::uint64_t base_seed;
    if (opt.seed) {
        base_seed = *opt.seed;
    } else if (cfg.has("seed")) {
        base_seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
    } else {
        throw ConfigError("missing required key 'seed'");
    }
    const double cmp_tol = opt.tol ? *opt.tol : cfg.get_double("tol", 1e-5);
    const auto jobs = cfg.get_string_list("jobs");
    if (jobs.empty()) throw ConfigError("missing required key 'jobs'");

    namespace fs = std::filesystem;
    fs::create_directories(opt.out_dir);

    RunSummary sum;
    CsvTable csv;
    csv.header = "job,parameter,value";
    for (const auto& job : jobs) {
        const std::uint64_t job_seed = base_seed ^ detail::fnv1a(job);
        JobResult res;
        res.name = job;
        try {
            res.report = detail::execute_job(job, cfg, job_seed, cmp_tol);
            res.pass = res.report.at("pass").get<bool>();
        } catch (const std::exception& e) {
            res.report = report_json(job, {}, {}, false, job_seed);
            res.report["error"] = e.what();
            res.pass = false;
        }
        write_json_file((fs::path(opt.out_dir) / detail::job_file_name(job)).string(),
                        res.report);
        append_report_rows(csv, "", res.report);
        sum.all_pass = sum.all_pass && res.pass;
        sum.jobs.push_back(std::move(res));
    }
    csv.write((fs::path(opt.out_dir) / "summary.csv").string());
    sum.exit_code = sum.all_pass ? 0 : 1;
    return sum;
}

inline RunSummary sweep_config(const Config& cfg, const std::string& axis,
                               const std::vector<std::string>& values, const RunOptions& opt) {
    static const std::map<std::string, std::string> axis_key = {
        {"eps", "criticality.offsets"}, {"n", "problem.n"},        {"T", "problem.T"},
        {"grading", "grid.grading"},    {"samples", "check.samples"},
    };
    const auto it = axis_key.find(axis);
    if (it == axis_key.end())
        throw ParameterError("unknown sweep axis '" + axis +
                             "' (expected eps, n, T, grading or samples)");
    if (values.empty()) throw ParameterError("sweep needs at least one value");

    namespace fs = std::filesystem;
    fs::create_directories(opt.out_dir);
    RunSummary sum;
    CsvTable csv;
    csv.header = "axis,value,job,parameter,value_measured";
    for (std::size_t i = 0; i < values.size(); ++i) {
        Config step = cfg;
        step.set(it->second, values[i]);
        RunOptions sub = opt;
        sub.out_dir =
            (fs::path(opt.out_dir) / (axis + "_" + std::to_string(i))).string();
        const RunSummary one = run_config(step, sub);
        for (const auto& jr : one.jobs) {
            CsvTable local;
            append_report_rows(local, "", jr.report);
            for (const auto& row : local.rows)
                csv.rows.push_back(axis + "," + values[i] + "," + row);
            sum.all_pass = sum.all_pass && jr.pass;
            sum.jobs.push_back(jr);
        }
    }
    csv.write((fs::path(opt.out_dir) / "sweep.csv").string());
    sum.exit_code = sum.all_pass ? 0 : 1;
    return sum;
}

} // namespace parreg
