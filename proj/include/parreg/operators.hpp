#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "parreg/admissibility.hpp"
#include "parreg/envelope.hpp"
#include "parreg/grid.hpp"
#include "parreg/norms.hpp"
#include "parreg/scale.hpp"

namespace parreg {

/// Time-dependent operator family A(t) = profile(t) * base, acting from the
/// domain level down to the base space. The separable profile form keeps exact
/// time averages available; `diagonal` marks families that are diagonal in the
/// scale's eigenbasis.
struct OperatorFamily {
    ScalePtr scale;
    bool diagonal = true;
    bool autonomous = true;
    Envelope profile = Envelope::constant(1.0);
    Eigen::VectorXd diag_base;
    Eigen::MatrixXd mat_base;
    double horizon = 1.0;

    Eigen::VectorXd diag_at(double t) const { return profile.eval(t) * diag_base; }
    Eigen::MatrixXd mat_at(double t) const { return profile.eval(t) * mat_base; }

    Eigen::VectorXd apply(double t, const Eigen::VectorXd& x) const {
        if (diagonal) return diag_at(t).cwiseProduct(x);
        return mat_at(t) * x;
    }
};

/// Heat-type model family: diagonal with lambda_i = 1 + (i pi)^2, i = 1..n.
inline OperatorFamily make_diagonal_heat(std::size_t n, double T = 1.0, double gamma_star = 1.0) {
    if (n == 0) throw ParameterError("family needs at least one mode");
    std::vector<double> lam(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double ip = static_cast<double>(i + 1) * std::numbers::pi;
        lam[i] = 1.0 + ip * ip;
    }
    OperatorFamily f;
    f.scale = make_scale(lam, gamma_star);
    f.diag_base = Eigen::Map<const Eigen::VectorXd>(lam.data(), static_cast<Eigen::Index>(n));
    f.mat_base = f.diag_base.asDiagonal();
    f.horizon = T;
    return f;
}

/// Diagonal family with caller-chosen weights (ascending, >= 1).
inline OperatorFamily make_scalar_family(std::vector<double> lambda, double T = 1.0,
                                         double gamma_star = 1.0) {
    OperatorFamily f;
    f.scale = make_scale(lambda, gamma_star);
    f.diag_base = Eigen::Map<const Eigen::VectorXd>(lambda.data(),
                                                    static_cast<Eigen::Index>(lambda.size()));
    f.mat_base = f.diag_base.asDiagonal();
    f.horizon = T;
    return f;
}

/// Measurable-in-time modulation a(t) * A with a bounded positive profile.
inline OperatorFamily make_nonautonomous(const OperatorFamily& base, const Envelope& profile,
                                         double profile_lo, double profile_hi) {
    if (!base.autonomous) throw InvalidInputError("base family must be autonomous");
    if (!(profile_lo > 0.0) || !(profile_lo <= profile_hi))
        throw ParameterError("profile bounds must satisfy 0 < lo <= hi");
    OperatorFamily f = base;
    f.autonomous = false;
    f.profile = profile;
    return f;
}

/// Non-self-adjoint example: the top 2x2 block is a Jordan-type block
/// [[lambda_1, coupling * lambda_1], [0, lambda_2]]; the spectrum stays on the
/// diagonal, but the family is no longer diagonal in the eigenbasis.
inline OperatorFamily make_jordan_family(std::size_t n, double coupling, double T = 1.0,
                                         double gamma_star = 1.0) {
    if (n < 2) throw ParameterError("Jordan example needs n >= 2");
    OperatorFamily f = make_diagonal_heat(n, T, gamma_star);
    f.diagonal = false;
    f.mat_base(0, 1) = coupling * f.diag_base[0];
    return f;
}

/// Autonomous family with the exact time average of the profile over [0, T].
inline OperatorFamily time_average(const OperatorFamily& fam, double T) {
    OperatorFamily f = fam;
    const double a = fam.profile.mean(0.0, T);
    f.autonomous = true;
    f.profile = Envelope::constant(a);
    return f;
}

enum class PerturbKind { None, LqCritical, MixedScale, TraceL1 };

/// One perturbation slot B_i(t) = sign * b_i(t) * Lambda^{beta_i - gamma_i},
/// realized diagonally; it maps the height-beta_i space into the
/// height-gamma_i space with operator norm exactly b_i(t).
struct PerturbComponent {
    SpaceLevel target;
    double beta = 1.0;
    Envelope b = Envelope::zero();
    Rat q_class = Rat(0);
    ExponentTriple triple{Rat(1), Rat(0), Rat(1, 2)};
    Eigen::VectorXd factor_diag;
    double sign = 1.0;

    Eigen::VectorXd apply(double t, const Eigen::VectorXd& x) const {
        return (sign * b.eval(t)) * factor_diag.cwiseProduct(x);
    }

    Eigen::MatrixXd matrix_at(double t) const {
        return (sign * b.eval(t)) * Eigen::MatrixXd(factor_diag.asDiagonal());
    }
};

struct Perturbation {
    PerturbKind kind = PerturbKind::None;
    ScalePtr scale;
    std::vector<PerturbComponent> comps;

    bool none() const { return kind == PerturbKind::None || comps.empty(); }

    Eigen::VectorXd apply(double t, const Eigen::VectorXd& x) const {
        Eigen::VectorXd y = Eigen::VectorXd::Zero(x.size());
        for (const auto& c : comps) y += c.apply(t, x);
        return y;
    }

    /// Summed diagonal of the perturbation at time t.
    Eigen::VectorXd diag_at(double t) const {
        Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(scale->dim()));
        for (const auto& c : comps) d += (c.sign * c.b.eval(t)) * c.factor_diag;
        return d;
    }
};

inline Perturbation make_no_perturbation(ScalePtr scale) {
    Perturbation B;
    B.kind = PerturbKind::None;
    B.scale = std::move(scale);
    return B;
}

/// Critical-exponent perturbation with an L^q budget: maps the height
/// 1 - 1/q space into the base space, ||B(t)|| = b(t).
inline Perturbation make_lq_perturbation(ScalePtr scale, Envelope b, const Rat& q,
                                         double sign = 1.0) {
    if (!(q > Rat(1))) throw ParameterError("envelope class exponent q must exceed 1");
    Perturbation B;
    B.kind = PerturbKind::LqCritical;
    B.scale = scale;
    PerturbComponent c;
    c.target = SpaceLevel::power(0.0);
    c.beta = 1.0 - 1.0 / to_double(q);
    c.b = std::move(b);
    c.q_class = q;
    c.factor_diag = scale->power_weights(c.beta);
    c.sign = sign;
    B.comps.push_back(std::move(c));
    return B;
}

/// Mixed-scale perturbation: slot i maps the height beta_i space into the
/// height gamma_i rung with ||B_i(t)|| = b_i(t).
inline Perturbation make_mixed_perturbation(ScalePtr scale,
                                            std::vector<std::pair<ExponentTriple, Envelope>> slots,
                                            double sign = 1.0) {
    if (slots.empty()) throw InvalidInputError("mixed perturbation needs at least one slot");
    Perturbation B;
    B.kind = PerturbKind::MixedScale;
    B.scale = scale;
    for (auto& [tr, env] : slots) {
        const double gamma = to_double(tr.gamma);
        const double beta = to_double(tr.beta);
        if (!(gamma > 0.0) || !(gamma <= scale->gamma_star()))
            throw ParameterError("slot gamma must lie in (0, gamma_star]");
        if (!(beta > 0.0) || !(beta <= 1.0)) throw ParameterError("slot beta must lie in (0, 1]");
        PerturbComponent c;
        c.target = SpaceLevel::power(gamma);
        c.beta = beta;
        c.b = std::move(env);
        c.triple = tr;
        c.factor_diag = scale->power_weights(beta - gamma);
        c.sign = sign;
        B.comps.push_back(std::move(c));
    }
    return B;
}

/// Borderline perturbation with an L^{p'} budget: maps the domain into the
/// trace space (height 1 - 1/p, priced in the interpolation norm).
inline Perturbation make_trace_perturbation(ScalePtr scale, Envelope b, const Rat& p,
                                            double sign = 1.0) {
    if (!(p > Rat(1))) throw ParameterError("p must exceed 1");
    Perturbation B;
    B.kind = PerturbKind::TraceL1;
    B.scale = scale;
    PerturbComponent c;
    const double pd = to_double(p);
    c.target = SpaceLevel::interp(1.0 - 1.0 / pd, pd);
    c.beta = 1.0;
    c.b = std::move(b);
    c.q_class = p / (p - Rat(1));
    c.factor_diag = scale->power_weights(1.0 / pd);
    c.sign = sign;
    B.comps.push_back(std::move(c));
    return B;
}

/// Declares where a forcing component is priced.
struct ForcingSlot {
    std::string name;
    double p = 2.0;
    double nu = 0.0;
    SpaceLevel level = SpaceLevel::power(0.0);

    static ForcingSlot base(double p, double kappa) {
        return {"base", p, kappa, SpaceLevel::power(0.0)};
    }
    static ForcingSlot rung(int i, const ExponentTriple& tr) {
        return {"rung" + std::to_string(i), to_double(tr.r), to_double(tr.nu),
                SpaceLevel::power(to_double(tr.gamma))};
    }
    static ForcingSlot l1_trace(double p) {
        return {"l1_trace", 1.0, 0.0, SpaceLevel::interp(1.0 - 1.0 / p, p)};
    }
};

/// One forcing component: separable profile(t) * direction, piecewise constant
/// per cell, or a sampled (piecewise linear) grid function. Cell integrals and
/// slot norms of the first two forms are exact, so singular profiles and
/// spikes lose no mass to quadrature.
class ForcingComponent {
public:
    static ForcingComponent separable(ForcingSlot slot, Envelope profile,
                                      Eigen::VectorXd direction) {
        if (!direction.allFinite()) throw InvalidInputError("forcing direction must be finite");
        ForcingComponent c;
        c.slot_ = std::move(slot);
        c.form_ = Form::Separable;
        c.profile_ = std::move(profile);
        c.dir_ = std::move(direction);
        return c;
    }

    static ForcingComponent piecewise(ForcingSlot slot, GridPtr grid,
                                      std::vector<Eigen::VectorXd> cell_values) {
        if (cell_values.size() != grid->cells())
            throw InvalidInputError("piecewise forcing needs one value per cell");
        for (const auto& v : cell_values)
            if (!v.allFinite()) throw InvalidInputError("forcing values must be finite");
        ForcingComponent c;
        c.slot_ = std::move(slot);
        c.form_ = Form::PiecewiseConst;
        c.pgrid_ = std::move(grid);
        c.pvals_ = std::move(cell_values);
        return c;
    }

    static ForcingComponent sampled(ForcingSlot slot, GridFunction u) {
        ForcingComponent c;
        c.slot_ = std::move(slot);
        c.form_ = Form::Sampled;
        c.sampled_.emplace(std::move(u));
        return c;
    }

    const ForcingSlot& slot() const { return slot_; }

    std::size_t dim() const {
        switch (form_) {
            case Form::Separable: return static_cast<std::size_t>(dir_.size());
            case Form::PiecewiseConst: return static_cast<std::size_t>(pvals_.front().size());
            case Form::Sampled: return sampled_->dim();
        }
        return 0;
    }

    Eigen::VectorXd eval(double t) const {
        switch (form_) {
            case Form::Separable: return profile_.eval(t) * dir_;
            case Form::PiecewiseConst: return pvals_[pgrid_->locate(t)];
            case Form::Sampled: return sampled_->eval(t);
        }
        return {};
    }

    /// Exact int_a^b f(t) dt (trapezoid segments are exact for the sampled form
    /// because the integrand is piecewise linear).
    Eigen::VectorXd integral(double a, double b) const {
        switch (form_) {
            case Form::Separable: return profile_.moment(a, b, 0) * dir_;
            case Form::PiecewiseConst: {
                Eigen::VectorXd acc = Eigen::VectorXd::Zero(dir_dim());
                for_clipped(*pgrid_, a, b, [&](std::size_t j, double lo, double hi) {
                    acc += (hi - lo) * pvals_[j];
                });
                return acc;
            }
            case Form::Sampled: {
                Eigen::VectorXd acc = Eigen::VectorXd::Zero(dir_dim());
                for_clipped(sampled_->grid(), a, b, [&](std::size_t, double lo, double hi) {
                    acc += 0.5 * (hi - lo) * (sampled_->eval(lo) + sampled_->eval(hi));
                });
                return acc;
            }
        }
        return {};
    }

    /// || f ||_{L^{slot.p}(a, b, t^{slot.nu} dt; slot.level)}. Exact for the
    /// separable and piecewise forms; Gauss quadrature for sampled data.
    double slot_norm(const HilbertScale& scale, double a, double b) const {
        const auto& s = slot_;
        switch (form_) {
            case Form::Separable:
                return profile_.class_norm(s.p, s.nu, a, b) * scale.level_norm(dir_, s.level);
            case Form::PiecewiseConst: {
                double acc = 0.0;
                for_clipped(*pgrid_, a, b, [&](std::size_t j, double lo, double hi) {
                    const double nv = scale.level_norm(pvals_[j], s.level);
                    acc += TimeGrid::weight_mass_between(lo, hi, s.nu) * std::pow(nv, s.p);
                });
                return std::pow(acc, 1.0 / s.p);
            }
            case Form::Sampled: {
                const auto w = TimeGrid::gauss_weights();
                double acc = 0.0;
                for_clipped(sampled_->grid(), a, b, [&](std::size_t, double lo, double hi) {
                    const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
                    const double rr = std::sqrt(0.6);
                    const double pts[3] = {c - h * rr, c, c + h * rr};
                    double avg = 0.0;
                    for (int k = 0; k < 3; ++k)
                        avg += w[k] * std::pow(scale.level_norm(sampled_->eval(pts[k]), s.level),
                                               s.p);
                    acc += TimeGrid::weight_mass_between(lo, hi, s.nu) * avg;
                });
                return std::pow(acc, 1.0 / s.p);
            }
        }
        return 0.0;
    }

    /// Separable profiles must actually lie in the slot's weighted class.
    void require_in_class(double T) const {
        if (form_ != Form::Separable) return;
        if (!profile_.in_weighted_class(slot_.p, slot_.nu, T) ||
            !std::isfinite(profile_.class_norm(slot_.p, slot_.nu, 0.0, T)))
            throw EnvelopeClassError("forcing profile lies outside the slot class L^" +
                                     std::to_string(slot_.p) + "(w_" + std::to_string(slot_.nu) +
                                     ") on (0, T)");
    }

private:
    enum class Form { Separable, PiecewiseConst, Sampled };

    Eigen::Index dir_dim() const { return static_cast<Eigen::Index>(dim()); }

    template <class F>
    static void for_clipped(const TimeGrid& g, double a, double b, F&& f) {
        const std::size_t j0 = g.locate(a);
        for (std::size_t j = j0; j < g.cells(); ++j) {
            const double lo = std::max(a, g.node(j));
            const double hi = std::min(b, g.node(j + 1));
            if (lo >= b) break;
            if (lo < hi) f(j, lo, hi);
        }
    }

    ForcingSlot slot_;
    Form form_ = Form::Separable;
    Envelope profile_ = Envelope::zero();
    Eigen::VectorXd dir_;
    GridPtr pgrid_;
    std::vector<Eigen::VectorXd> pvals_;
    std::optional<GridFunction> sampled_;
};

/// Sum of forcing components, each priced in its declared slot.
struct Inhomogeneity {
    ScalePtr scale;
    std::vector<ForcingComponent> comps;

    std::size_t dim() const { return scale->dim(); }

    Eigen::VectorXd eval(double t) const {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim()));
        for (const auto& c : comps) acc += c.eval(t);
        return acc;
    }

    Eigen::VectorXd integral(double a, double b) const {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim()));
        for (const auto& c : comps) acc += c.integral(a, b);
        return acc;
    }

    /// Pre-infimum sum-space bound over (a, b).
    double sum_norm_upper(double a, double b) const {
        double acc = 0.0;
        for (const auto& c : comps) acc += c.slot_norm(*scale, a, b);
        return acc;
    }

    void require_in_class(double T) const {
        for (const auto& c : comps) c.require_in_class(T);
    }
};

inline Inhomogeneity make_inhomogeneity(ScalePtr scale, std::vector<ForcingComponent> comps) {
    for (const auto& c : comps)
        if (c.dim() != scale->dim())
            throw InvalidInputError("forcing component dimension does not match scale");
    return Inhomogeneity{std::move(scale), std::move(comps)};
}

} // namespace parreg
