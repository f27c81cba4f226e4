// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "logspace.hpp"
#include "quadrature.hpp"

namespace hammix {

// ln Gamma(x) for x > 0.
inline double log_gamma(double x) {
    if (!(x > 0)) throw std::domain_error("log_gamma: requires x > 0");
    return std::lgamma(x);
}

namespace detail {

// Direct series for 2F1(1, b; c; z) = sum_n [(b)_n / (c)_n] z^n, all terms
// positive, accumulated in log space so very large b cannot overflow. For
// b >> c the terms first grow to a (possibly astronomical) peak near
// n ~ (bz - c)/(1 - z) before the geometric decay takes over.
inline double series_2f1_1bc_log(double b, double c, double z, int max_iter = 2000000) {
    double log_term = 0.0, log_sum = 0.0;
    for (int n = 0; n < max_iter; ++n) {
        const double ratio = (b + n) / (c + n) * z;
        log_term += std::log(ratio);
        log_sum = log_add(log_sum, log_term);
        const double rbar = std::max((b + n + 1) / (c + n + 1) * z, z);
        if (rbar < 1.0 && log_term + std::log(rbar / (1.0 - rbar)) < log_sum + std::log(2.3e-17))
            return log_sum;
    }
    throw QuadratureError("2F1 series: iteration cap reached, partial log-sum " +
                              std::to_string(log_sum),
                          std::exp(log_term - log_sum));
}

// Euler transformation 2F1(1,b;c;z) = (1-z)^(c-1-b) 2F1(c-1, c-b; c; z).
// When c - b is a nonpositive integer the transformed series terminates;
// otherwise its terms decay by an extra factor n^(c-b). Terms are signed,
// so a cancellation guard rejects the result when significance is lost.
inline std::optional<double> euler_2f1_1bc(double b, double c, double z) {
    const double a1 = c - 1.0, b1 = c - b;
    double term = 1.0, sum = 1.0, max_abs = 1.0;
    for (int n = 0; n < 100000; ++n) {
        term *= (a1 + n) * (b1 + n) / ((c + n) * (n + 1.0)) * z;
        sum += term;
        max_abs = std::max(max_abs, std::abs(term));
        if (!std::isfinite(sum)) return std::nullopt;
        if (std::abs(term) < 1e-18 * std::abs(sum) + 1e-300) break;
    }
    if (std::abs(sum) < 1e-7 * max_abs) return std::nullopt;  // cancellation
    return std::pow(1.0 - z, c - 1.0 - b) * sum;
}

}  // namespace detail

// ln 2F1(1, b; c; z) for b, c > 0 and z in [0, 1).
inline double gauss_2f1_1bc_log(double b, double c, double z) {
    if (!(b > 0) || !(c > 0)) throw std::domain_error("gauss_2f1_1bc: requires b, c > 0");
    if (!(z >= 0) || z >= 1) throw std::domain_error("gauss_2f1_1bc: requires z in [0,1)");
    if (z == 0) return 0.0;
    if (z > 0.75 && b - c <= 30.0) {
        if (auto v = detail::euler_2f1_1bc(b, c, z); v && *v > 0) return std::log(*v);
    }
    return detail::series_2f1_1bc_log(b, c, z);
}

// 2F1(1, b; c; z); the only hypergeometric case needed here.
inline double gauss_2f1_1bc(double b, double c, double z) {
    if (!(b > 0) || !(c > 0)) throw std::domain_error("gauss_2f1_1bc: requires b, c > 0");
    if (!(z >= 0) || z >= 1) throw std::domain_error("gauss_2f1_1bc: requires z in [0,1)");
    if (z == 0) return 1.0;
    if (z > 0.75 && b - c <= 30.0) {
        if (auto v = detail::euler_2f1_1bc(b, c, z)) return *v;
    }
    return std::exp(detail::series_2f1_1bc_log(b, c, z));
}

// Generalized factorial coefficients, carried sign-folded: the quantity
// returned is D(n,K) = (-1)^n C(n,K;-gamma), where C satisfies
//   C(n,K;a) = a C(n-1,K-1;a) + (K a - n + 1) C(n-1,K;a),  C(1,1;a) = a.
// Substituting a = -gamma and folding the (-1)^n gives the all-nonnegative
// recursion
//   D(n,K) = gamma D(n-1,K-1) + (K gamma + n - 1) D(n-1,K),
// with D(0,0) = 1 and D(n,0) = 0 for n >= 1, evaluated in log space.
// Returns the full row ln D(n, K) for K = 0..n.
inline std::vector<double> gen_factorial_coeff_log_row(int n, double gamma) {
    if (n < 0) throw std::domain_error("gen_factorial_coeff: n >= 0");
    if (!(gamma > 0)) throw std::domain_error("gen_factorial_coeff: gamma > 0");
    const double lg = std::log(gamma);
    std::vector<double> row{0.0};  // D(0,0) = 1
    for (int i = 1; i <= n; ++i) {
        std::vector<double> next(i + 1, kNegInf);
        for (int K = 1; K <= i; ++K) {
            const double left = K - 1 <= i - 1 ? lg + row[K - 1] : kNegInf;
            const double right =
                K <= i - 1 ? std::log(K * gamma + i - 1) + row[K] : kNegInf;
            next[K] = log_add(left, right);
        }
        row = std::move(next);
    }
    return row;
}

inline SignedLogValue gen_factorial_coeff_signed(int n, int K, double gamma) {
    if (n < 0 || K < 0) throw std::domain_error("gen_factorial_coeff: n, K >= 0");
    if (K > n) return SignedLogValue::zero();
    const auto row = gen_factorial_coeff_log_row(n, gamma);
    return SignedLogValue::from_log(row[K]);
}

// ln V(n,K) for the mixing-weight prior with Gamma(gamma,1) unnormalized
// weights and a 1-shifted Poisson(lambda) number of components:
//   V(n,K) = lambda^(K-1) int_0^inf u^(n-1)/Gamma(n)
//            * (lambda + K(u+1)^g) / (u+1)^(n+g(K+1))
//            * exp(-lambda ((u+1)^g - 1)/(u+1)^g) du.
// The substitution t = 1/(1+u) maps onto (0,1):
//   V(n,K) = lambda^(K-1)/Gamma(n) int_0^1 (1-t)^(n-1)
//            * (lambda t^(g(K+1)-1) + K t^(gK-1)) exp(lambda expm1(g ln t)) dt,
// which is evaluated by adaptive quadrature on the log-integrand. The
// t^(gK-1) endpoint singularity (for gK < 1) is integrable; nodes stay
// interior and the refinement digs toward 0.
inline double v_integral_log(int n, int K, double gamma, double lambda) {
    if (n < 1 || K < 1 || K > n) throw std::domain_error("v_integral_log: need 1 <= K <= n");
    if (!(gamma > 0) || !(lambda > 0))
        throw std::domain_error("v_integral_log: gamma, lambda > 0");
    const double log_lambda = std::log(lambda), log_k = std::log(static_cast<double>(K));
    const auto logf = [&](double t) {
        const double lt = std::log(t);
        const double frnt = n > 1 ? (n - 1) * std::log1p(-t) : 0.0;
        const double inner =
            log_add(log_lambda + (gamma * (K + 1) - 1.0) * lt, log_k + (gamma * K - 1.0) * lt);
        return frnt + inner + lambda * std::expm1(gamma * lt);
    };
    const double log_integral = integrate_adaptive_log(logf, 0.0, 1.0, 1e-10);
    return (K - 1) * log_lambda - log_gamma(static_cast<double>(n)) + log_integral;
}

// Draw from the Poisson distribution shifted onto {shift, shift+1, ...}.
template <class Rng>
inline int shifted_poisson_sample(int shift, double lambda, Rng& rng) {
    if (shift != 0 && shift != 1) throw std::domain_error("shifted_poisson: shift in {0,1}");
    if (!(lambda > 0)) throw std::domain_error("shifted_poisson: lambda > 0");
    std::poisson_distribution<int> d(lambda);
    return shift + d(rng);
}

inline double shifted_poisson_log_pmf(int l, int shift, double lambda) {
    if (l < shift) return kNegInf;
    const int k = l - shift;
    return -lambda + k * std::log(lambda) - log_gamma(k + 1.0);
}

}  // namespace hammix
