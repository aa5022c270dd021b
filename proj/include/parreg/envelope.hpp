#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "parreg/errors.hpp"

namespace parreg {

/// Scalar time envelope in symbolic form: zero, a constant, a power c t^{-alpha},
/// or a piecewise constant profile. Weighted L^q norms, integrability-class
/// checks, first moments and budget inversion are all closed-form, so budget
/// partitions carry no quadrature error.
class Envelope {
public:
    enum class Kind { Zero, Constant, Power, Piecewise };

    static Envelope zero() { return Envelope(Kind::Zero); }

    static Envelope constant(double c) {
        require_nonneg(c);
        if (c == 0.0) return zero();
        Envelope e(Kind::Constant);
        e.c_ = c;
        return e;
    }

    /// c * t^{-alpha}; alpha may be negative (a growing profile).
    static Envelope power(double c, double alpha) {
        require_nonneg(c);
        if (c == 0.0) return zero();
        if (!std::isfinite(alpha)) throw ParameterError("envelope exponent must be finite");
        Envelope e(Kind::Power);
        e.c_ = c;
        e.alpha_ = alpha;
        return e;
    }

    /// Constant value values[k] on [breaks[k], breaks[k+1]); the final value
    /// extends to infinity. breaks[0] must be 0.
    static Envelope piecewise(std::vector<double> breaks, std::vector<double> values) {
        if (breaks.empty() || breaks.front() != 0.0)
            throw InvalidInputError("piecewise envelope must start at t = 0");
        if (values.size() != breaks.size())
            throw InvalidInputError("piecewise envelope needs one value per break");
        for (std::size_t k = 0; k + 1 < breaks.size(); ++k)
            if (!(breaks[k] < breaks[k + 1]))
                throw InvalidInputError("piecewise envelope breaks must increase");
        for (double v : values) require_nonneg(v);
        Envelope e(Kind::Piecewise);
        e.breaks_ = std::move(breaks);
        e.values_ = std::move(values);
        return e;
    }

    /// Mass-one spike of the given width at t0 (zero elsewhere).
    static Envelope spike(double t0, double width) {
        if (!(t0 >= 0.0) || !(width > 0.0)) throw ParameterError("bad spike parameters");
        if (t0 == 0.0) return piecewise({0.0, width}, {1.0 / width, 0.0});
        return piecewise({0.0, t0, t0 + width}, {0.0, 1.0 / width, 0.0});
    }

    Kind kind() const { return kind_; }
    bool is_zero() const { return kind_ == Kind::Zero; }

    double eval(double t) const {
        switch (kind_) {
            case Kind::Zero: return 0.0;
            case Kind::Constant: return c_;
            case Kind::Power: return c_ * std::pow(t, -alpha_);
            case Kind::Piecewise: {
                std::size_t k = 0;
                while (k + 1 < breaks_.size() && t >= breaks_[k + 1]) ++k;
                return values_[k];
            }
        }
        return 0.0;
    }

    /// Is int_0^T t^mu b(t)^q dt finite? (q >= 1, mu > -1.)
    bool in_weighted_class(double q, double mu, double T) const {
        check_qmu(q, mu);
        (void)T;
        if (kind_ != Kind::Power) return true;
        return mu - alpha_ * q + 1.0 > 0.0;
    }

    /// || b ||_{L^q(a,b; t^mu dt)}, closed form. Infinite-mass cases return +inf.
    double class_norm(double q, double mu, double a, double b) const {
        check_qmu(q, mu);
        if (!(0.0 <= a) || !(a <= b)) throw ParameterError("bad envelope norm interval");
        if (a == b || is_zero()) return 0.0;
        switch (kind_) {
            case Kind::Constant:
                return c_ * std::pow(power_mass(a, b, mu), 1.0 / q);
            case Kind::Power: {
                const double beta = mu - alpha_ * q + 1.0;
                if (a == 0.0 && beta <= 0.0) return std::numeric_limits<double>::infinity();
                return c_ * std::pow(power_mass_exp(a, b, beta), 1.0 / q);
            }
            case Kind::Piecewise: {
                double acc = 0.0;
                for_pieces(a, b, [&](double lo, double hi, double v) {
                    if (v > 0.0) acc += std::pow(v, q) * power_mass(lo, hi, mu);
                });
                return std::pow(acc, 1.0 / q);
            }
            default: return 0.0;
        }
    }

    /// Smallest sigma in (from, T] with class_norm(q, mu, from, sigma) == budget,
    /// or T when the remaining mass is below the budget. Closed form throughout.
    double invert_budget(double q, double mu, double from, double budget, double T) const {
        check_qmu(q, mu);
        if (!(budget > 0.0)) throw ParameterError("budget must be positive");
        if (!(from >= 0.0) || !(from < T)) throw ParameterError("bad inversion start");
        const double total = class_norm(q, mu, from, T);
        if (!std::isfinite(total))
            throw EnvelopeClassError("envelope has infinite budget mass on the interval");
        if (total <= budget) return T;
        const double target = std::pow(budget, q);
        switch (kind_) {
            case Kind::Constant: {
                const double sigma = mass_inverse(from, target / std::pow(c_, q), mu);
                return std::min(sigma, T);
            }
            case Kind::Power: {
                const double beta = mu - alpha_ * q + 1.0;
                const double sigma = mass_inverse_exp(from, target / std::pow(c_, q), beta);
                return std::min(sigma, T);
            }
            case Kind::Piecewise: {
                double rem = target;
                double result = T;
                for_pieces(from, T, [&](double lo, double hi, double v) {
                    if (result < T || v <= 0.0) return;
                    const double piece = std::pow(v, q) * power_mass(lo, hi, mu);
                    if (piece < rem) {
                        rem -= piece;
                    } else {
                        result = mass_inverse(lo, rem / std::pow(v, q), mu);
                    }
                });
                return std::min(result, T);
            }
            default:
                return T;
        }
    }

    /// Exact int_a^b t^k b(t) dt for k in {0, 1}; used to integrate the envelope
    /// against piecewise-linear trajectories without sampling the singularity.
    double moment(double a, double b, int k) const {
        if (k != 0 && k != 1) throw ParameterError("envelope moment order must be 0 or 1");
        if (!(0.0 <= a) || !(a <= b)) throw ParameterError("bad envelope moment interval");
        if (a == b || is_zero()) return 0.0;
        const double kk = static_cast<double>(k);
        switch (kind_) {
            case Kind::Constant: return c_ * power_mass(a, b, kk);
            case Kind::Power: {
                const double beta = kk - alpha_ + 1.0;
                if (a == 0.0 && beta <= 0.0) return std::numeric_limits<double>::infinity();
                return c_ * power_mass_exp(a, b, beta);
            }
            case Kind::Piecewise: {
                double acc = 0.0;
                for_pieces(a, b, [&](double lo, double hi, double v) {
                    acc += v * power_mass(lo, hi, kk);
                });
                return acc;
            }
            default: return 0.0;
        }
    }

    double mean(double a, double b) const { return moment(a, b, 0) / (b - a); }

    double sup_on(double a, double b) const {
        switch (kind_) {
            case Kind::Zero: return 0.0;
            case Kind::Constant: return c_;
            case Kind::Power: return alpha_ >= 0.0 ? eval(std::max(a, 1e-300)) : eval(b);
            case Kind::Piecewise: {
                double s = 0.0;
                for_pieces(a, b, [&](double, double, double v) { s = std::max(s, v); });
                return s;
            }
        }
        return 0.0;
    }

    Envelope scaled(double factor) const {
        require_nonneg(factor);
        if (factor == 0.0 || is_zero()) return zero();
        Envelope e = *this;
        if (kind_ == Kind::Piecewise) {
            for (double& v : e.values_) v *= factor;
        } else {
            e.c_ *= factor;
        }
        return e;
    }

private:
    explicit Envelope(Kind k) : kind_(k) {}

    static void require_nonneg(double v) {
        if (!std::isfinite(v) || v < 0.0)
            throw InvalidInputError("envelope values must be finite and nonnegative");
    }

    static void check_qmu(double q, double mu) {
        if (!(q >= 1.0)) throw ParameterError("envelope class exponent q must be >= 1");
        if (!(mu > -1.0)) throw ParameterError("envelope weight exponent must exceed -1");
    }

    // int_a^b t^mu dt via the exponent form below.
    static double power_mass(double a, double b, double mu) {
        return power_mass_exp(a, b, mu + 1.0);
    }

    // int_a^b t^{beta-1} dt = (b^beta - a^beta)/beta, log form at beta = 0.
    static double power_mass_exp(double a, double b, double beta) {
        if (beta == 0.0) {
            if (a == 0.0) return std::numeric_limits<double>::infinity();
            return std::log(b / a);
        }
        return (std::pow(b, beta) - std::pow(a, beta)) / beta;
    }

    // Solves power_mass(from, sigma, mu) = mass for sigma.
    static double mass_inverse(double from, double mass, double mu) {
        return mass_inverse_exp(from, mass, mu + 1.0);
    }

    static double mass_inverse_exp(double from, double mass, double beta) {
        if (beta == 0.0) return from * std::exp(mass);
        return std::pow(std::pow(from, beta) + beta * mass, 1.0 / beta);
    }

    template <class F>
    void for_pieces(double a, double b, F&& f) const {
        for (std::size_t k = 0; k < breaks_.size(); ++k) {
            const double lo = std::max(a, breaks_[k]);
            const double hi =
                k + 1 < breaks_.size() ? std::min(b, breaks_[k + 1]) : b;
            if (lo < hi) f(lo, hi, values_[k]);
        }
    }

    Kind kind_;
    double c_ = 0.0;
    double alpha_ = 0.0;
    std::vector<double> breaks_;
    std::vector<double> values_;
};

} // namespace parreg
