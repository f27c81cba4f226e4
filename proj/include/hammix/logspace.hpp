// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hammix {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(e^a + e^b), safe at -inf.
inline double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    double m = a > b ? a : b;
    return m + std::log1p(std::exp(-(a > b ? a - b : b - a)));
}

// log(e^a - e^b), requires a >= b.
inline double log_sub(double a, double b) {
    if (b == kNegInf) return a;
    if (a < b) throw std::domain_error("log_sub: negative difference");
    if (a == b) return kNegInf;
    return a + std::log1p(-std::exp(b - a));
}

// A real number carried as sign * exp(log_magnitude). sign 0 encodes an
// exact zero (log_magnitude is then -inf by convention).
struct SignedLogValue {
    double log_magnitude = kNegInf;
    int sign = 0;

    static SignedLogValue zero() { return {kNegInf, 0}; }
    static SignedLogValue from_log(double lm, int s = 1) {
        return lm == kNegInf ? zero() : SignedLogValue{lm, s};
    }

    double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_magnitude); }
    bool is_zero() const { return sign == 0; }
};

inline SignedLogValue slv_add(const SignedLogValue& a, const SignedLogValue& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.sign == b.sign) return {log_add(a.log_magnitude, b.log_magnitude), a.sign};
    if (a.log_magnitude == b.log_magnitude) return SignedLogValue::zero();
    return a.log_magnitude > b.log_magnitude
               ? SignedLogValue{log_sub(a.log_magnitude, b.log_magnitude), a.sign}
               : SignedLogValue{log_sub(b.log_magnitude, a.log_magnitude), b.sign};
}

// a * exp(log_scale), keeping the sign.
inline SignedLogValue slv_scale_log(const SignedLogValue& a, double log_scale) {
    if (a.is_zero()) return a;
    return {a.log_magnitude + log_scale, a.sign};
}

}  // namespace hammix
