#pragma once

#include <optional>
#include <string>
#include <vector>

#include "parreg/rational.hpp"

namespace parreg {

/// Exponent triple (r, nu, gamma) describing one perturbation slot: the
/// auxiliary integrability r, its time weight nu, and the spatial gap gamma.
/// beta is the domain height of the slot operator (defaults to the full
/// domain, beta = 1).
struct ExponentTriple {
    Rat r;
    Rat nu;
    Rat gamma;
    Rat beta = Rat(1);
};

struct AdmissibilityVerdict {
    bool admissible = false;
    /// Human-readable names of every violated clause (empty when admissible).
    std::vector<std::string> failed;

    std::string reason() const {
        std::string s;
        for (const auto& f : failed) {
            if (!s.empty()) s += "; ";
            s += f;
        }
        return s;
    }
};

/// Decides admissibility of (r, nu, gamma) for the ambient exponents
/// (p, kappa) on a scale with top gap gamma_star. The clauses, all exact:
///   gamma in (0,1),  gamma <= gamma_star,  nu >= 0,  nu + 1 < r <= p,
///   kappa/p <= nu/r,  (1+kappa)/p < (1+nu)/r <= (1+kappa)/p + gamma.
inline AdmissibilityVerdict is_admissible(const Rat& p, const Rat& kappa, const Rat& gamma_star,
                                          const ExponentTriple& tr) {
    if (!(p > Rat(1))) throw ParameterError("p must exceed 1");
    if (kappa < Rat(0) || !(kappa < p - Rat(1)))
        throw ParameterError("kappa must lie in [0, p-1)");
    if (!(gamma_star > Rat(0)) || gamma_star > Rat(1))
        throw ParameterError("gamma_star must lie in (0, 1]");
    if (tr.r <= Rat(0)) throw ParameterError("r must be positive");

    AdmissibilityVerdict v;
    auto fail = [&](const char* name) { v.failed.emplace_back(name); };

    if (!(tr.gamma > Rat(0) && tr.gamma < Rat(1))) fail("gamma in (0,1)");
    if (!(tr.gamma <= gamma_star)) fail("gamma <= gamma_star");
    if (!(tr.nu >= Rat(0))) fail("nu >= 0");
    if (!(tr.nu + Rat(1) < tr.r)) fail("nu + 1 < r");
    if (!(tr.r <= p)) fail("r <= p");
    if (!(kappa / p <= tr.nu / tr.r)) fail("kappa/p <= nu/r");
    const Rat lhs = (Rat(1) + kappa) / p;
    const Rat mid = (Rat(1) + tr.nu) / tr.r;
    if (!(lhs < mid)) fail("(1+kappa)/p < (1+nu)/r");
    if (!(mid <= lhs + tr.gamma)) fail("(1+nu)/r <= (1+kappa)/p + gamma");

    v.admissible = v.failed.empty();
    return v;
}

/// Companion time exponents for the envelope of a slot: the envelope must lie
/// in L^q(w_mu) with q = p r/(p-r) and mu = (nu p - kappa r)/(p - r). At the
/// critical slot r == p no finite q exists and the envelope must vanish; that
/// case is signalled by an empty optional.
struct SlotExponents {
    Rat q;
    Rat mu;
};

inline std::optional<SlotExponents> holder_exponents(const Rat& p, const Rat& kappa, const Rat& r,
                                                     const Rat& nu) {
    if (!(r <= p)) throw ParameterError("holder exponents need r <= p");
    if (r <= Rat(0)) throw ParameterError("r must be positive");
    if (r == p) return std::nullopt;
    return SlotExponents{p * r / (p - r), (nu * p - kappa * r) / (p - r)};
}

/// Generalized slot exponents when the slot operator only needs domain height
/// beta in [1 - (1+kappa)/p, 1]:
///   theta = 1 - (1-beta) p/(1+kappa),
///   q = p r/(p - r theta),  mu = (nu p - kappa r theta)/(p - r theta).
/// beta = 1 reduces exactly to holder_exponents (including the vanishing
/// sentinel at r == p).
inline std::optional<SlotExponents> generalized_b_params(const Rat& p, const Rat& kappa,
                                                         const Rat& r, const Rat& nu,
                                                         const Rat& beta) {
    if (!(r <= p)) throw ParameterError("generalized slot exponents need r <= p");
    if (r <= Rat(0)) throw ParameterError("r must be positive");
    const Rat beta_lo = Rat(1) - (Rat(1) + kappa) / p;
    if (beta < beta_lo || beta > Rat(1))
        throw ParameterError("beta must lie in [1 - (1+kappa)/p, 1]");
    const Rat theta = Rat(1) - (Rat(1) - beta) * p / (Rat(1) + kappa);
    const Rat den = p - r * theta;
    if (den == Rat(0)) return std::nullopt;
    return SlotExponents{p * r / den, (nu * p - kappa * r * theta) / den};
}

/// Witness for the two-sided embedding between the rung described by
/// (r, nu, gamma) and the ambient (p, kappa) data: intermediate exponents
/// (r_hat, nu_hat) and shift pair (s, s_hat = s + gamma) satisfying
///   p >= r_hat >= r,
///   kappa/p <= nu_hat/r_hat <= nu/r,
///   (1+kappa)/p < (1+nu_hat)/r_hat < (1+nu)/r,
///   s <= (1+nu_hat)/r_hat - (1+nu)/r,
///   s >= -gamma + (1+nu_hat)/r_hat - (1+kappa)/p.
struct EmbeddingWitness {
    bool feasible = false;
    Rat r_hat, nu_hat, s, s_hat;
};

/// Closed-form feasibility criterion for the witness system:
///   p >= r,  kappa/p <= nu/r,  (1+kappa)/p < (1+nu)/r <= gamma + (1+kappa)/p.
inline bool embedding_feasibility_criterion(const Rat& p, const Rat& kappa, const Rat& r,
                                            const Rat& nu, const Rat& gamma) {
    if (r <= Rat(0) || p <= Rat(0)) throw ParameterError("exponents must be positive");
    const Rat lhs = (Rat(1) + kappa) / p;
    const Rat mid = (Rat(1) + nu) / r;
    return p >= r && kappa / p <= nu / r && lhs < mid && mid <= gamma + lhs;
}

/// Feasibility decision plus a deterministic witness: (1+nu_hat)/r_hat is the
/// midpoint of ((1+kappa)/p, (1+nu)/r), 1/r_hat = min(1/r, midpoint - kappa/p)
/// (equivalently nu_hat/r_hat = max(kappa/p, midpoint - 1/r)), and s sits at
/// its upper bound. All arithmetic exact.
inline EmbeddingWitness embedding_feasibility(const Rat& p, const Rat& kappa, const Rat& r,
                                              const Rat& nu, const Rat& gamma) {
    EmbeddingWitness w;
    if (!embedding_feasibility_criterion(p, kappa, r, nu, gamma)) return w;
    const Rat lo = (Rat(1) + kappa) / p;
    const Rat hi = (Rat(1) + nu) / r;
    const Rat h = (lo + hi) / Rat(2);
    const Rat inv_r_hat = std::min(Rat(1) / r, h - kappa / p);
    w.feasible = true;
    w.r_hat = Rat(1) / inv_r_hat;
    w.nu_hat = h * w.r_hat - Rat(1);
    w.s = h - hi;
    w.s_hat = w.s + gamma;
    return w;
}

/// Verifies a witness against the full system; used to cross-check the
/// deterministic construction and brute-force searches.
inline bool witness_satisfies_system(const Rat& p, const Rat& kappa, const Rat& r, const Rat& nu,
                                     const Rat& gamma, const Rat& r_hat, const Rat& nu_hat,
                                     const Rat& s) {
    if (r_hat <= Rat(0)) return false;
    const Rat lo = (Rat(1) + kappa) / p;
    const Rat hi = (Rat(1) + nu) / r;
    const Rat mid = (Rat(1) + nu_hat) / r_hat;
    return p >= r_hat && r_hat >= r && kappa / p <= nu_hat / r_hat && nu_hat / r_hat <= nu / r &&
           lo < mid && mid < hi && s <= mid - hi && s >= mid - lo - gamma;
}

} // namespace parreg
