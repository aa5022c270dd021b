#pragma once

#include <boost/rational.hpp>
#include <cstdint>
#include <string>

#include "parreg/errors.hpp"

namespace parreg {

/// Exact rational scalar. The admissibility calculus decides equality boundary
/// cases, so it runs entirely on these; doubles only appear at the numerics
/// boundary via to_double.
using Rat = boost::rational<long long>;

inline Rat rat(long long num, long long den = 1) {
    if (den == 0) throw ParameterError("rational with zero denominator");
    return Rat(num, den);
}

inline double to_double(const Rat& x) {
    return static_cast<double>(x.numerator()) / static_cast<double>(x.denominator());
}

inline std::string to_string(const Rat& x) {
    if (x.denominator() == 1) return std::to_string(x.numerator());
    return std::to_string(x.numerator()) + "/" + std::to_string(x.denominator());
}

/// Parses "3", "-2", "3/4", "-7/2". Whitespace is not tolerated.
inline Rat parse_rational(const std::string& text) {
    if (text.empty()) throw ParameterError("empty rational literal");
    const auto slash = text.find('/');
    try {
        if (slash == std::string::npos) return Rat(std::stoll(text));
        const long long num = std::stoll(text.substr(0, slash));
        const long long den = std::stoll(text.substr(slash + 1));
        if (den == 0) throw ParameterError("rational literal with zero denominator: " + text);
        return Rat(num, den);
    } catch (const std::invalid_argument&) {
        throw ParameterError("malformed rational literal: " + text);
    } catch (const std::out_of_range&) {
        throw ParameterError("rational literal out of range: " + text);
    }
}

} // namespace parreg
