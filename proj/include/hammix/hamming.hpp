// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "logspace.hpp"
#include "rng.hpp"

namespace hammix {

// Center vector c and per-variable scale sigma_j > 0 of one Hamming
// distribution: the kernel weights a coordinate 1 when it matches the
// center and omega_j = exp(-1/sigma_j) when it does not.
struct HammingParams {
    std::vector<int> center;
    std::vector<double> scale;
};

// smallest scale accepted from samplers; never applied to user input
inline constexpr double kSigmaFloor = 1e-12;

inline void validate_hamming(const HammingParams& params, const std::vector<int>& m) {
    if (params.center.size() != m.size() || params.scale.size() != m.size())
        throw std::invalid_argument("hamming: parameter length mismatch");
    for (size_t j = 0; j < m.size(); ++j) {
        if (params.center[j] < 0 || params.center[j] >= m[j])
            throw std::invalid_argument("hamming: center code out of range");
        if (!(params.scale[j] > 0)) throw std::invalid_argument("hamming: sigma must be > 0");
    }
}

// ln p(x | c, sigma) = sum_j [ -(1 - delta_{c_j}(x_j))/sigma_j
//                              - ln(1 + (m_j - 1) e^{-1/sigma_j}) ].
inline double hamming_log_pmf(const int* x, const HammingParams& params,
                              const std::vector<int>& m) {
    double lp = 0.0;
    for (size_t j = 0; j < m.size(); ++j) {
        if (x[j] < 0 || x[j] >= m[j]) throw std::invalid_argument("hamming: code out of range");
        if (x[j] != params.center[j]) lp -= 1.0 / params.scale[j];
        lp -= std::log1p((m[j] - 1) * std::exp(-1.0 / params.scale[j]));
    }
    return lp;
}

inline double hamming_log_pmf(const std::vector<int>& x, const HammingParams& params,
                              const std::vector<int>& m) {
    if (x.size() != m.size()) throw std::invalid_argument("hamming: length mismatch");
    return hamming_log_pmf(x.data(), params, m);
}

// One draw: each coordinate independently emits the center with
// probability 1/(1+(m-1)w) and any other modality with probability
// w/(1+(m-1)w), w = exp(-1/sigma).
inline std::vector<int> hamming_sample(const HammingParams& params, const std::vector<int>& m,
                                       RngStream& rng) {
    std::vector<int> x(m.size());
    for (size_t j = 0; j < m.size(); ++j) {
        const double w = std::exp(-1.0 / params.scale[j]);
        const double total = 1.0 + (m[j] - 1) * w;
        const double u = rng.uniform() * total;
        if (u <= 1.0 || m[j] == 1) {
            x[j] = params.center[j];
        } else {
            int h = static_cast<int>((u - 1.0) / w);
            if (h >= m[j] - 1) h = m[j] - 2;
            x[j] = h < params.center[j] ? h : h + 1;  // skip the center slot
        }
    }
    return x;
}

// Normalized Gini heterogeneity index,
//   G = 1 - prod_j (e^{2/s_j} + m_j - 1) / (e^{1/s_j} + m_j - 1)^2,
// divided by its maximum 1 - prod_j 1/m_j. Ratios are formed in log space
// since e^{1/s} overflows for small sigma.
inline double gini_normalized(const std::vector<double>& scales, const std::vector<int>& m) {
    if (scales.size() != m.size()) throw std::invalid_argument("gini: length mismatch");
    double log_prod = 0.0, log_prod_inv_m = 0.0;
    for (size_t j = 0; j < m.size(); ++j) {
        if (!(scales[j] > 0)) throw std::invalid_argument("gini: sigma must be > 0");
        const double lm1 = std::log(static_cast<double>(m[j] - 1));
        if (m[j] > 1)
            log_prod += log_add(2.0 / scales[j], lm1) - 2.0 * log_add(1.0 / scales[j], lm1);
        log_prod_inv_m -= std::log(static_cast<double>(m[j]));
    }
    const double gmax = -std::expm1(log_prod_inv_m);
    if (gmax <= 0) throw std::domain_error("gini_normalized: undefined when all m_j = 1");
    return -std::expm1(log_prod) / gmax;
}

// Normalized Shannon entropy index:
//   H_j = ln(e^{1/s_j} + m_j - 1) - e^{1/s_j} / (s_j (e^{1/s_j} + m_j - 1)),
// summed over j and divided by sum_j ln m_j.
inline double shannon_normalized(const std::vector<double>& scales, const std::vector<int>& m) {
    if (scales.size() != m.size()) throw std::invalid_argument("shannon: length mismatch");
    double h = 0.0, hmax = 0.0;
    for (size_t j = 0; j < m.size(); ++j) {
        if (!(scales[j] > 0)) throw std::invalid_argument("shannon: sigma must be > 0");
        if (m[j] > 1) {
            const double lm1 = std::log(static_cast<double>(m[j] - 1));
            const double log_denom = log_add(1.0 / scales[j], lm1);
            h += log_denom - std::exp(1.0 / scales[j] - log_denom) / scales[j];
        }
        hmax += std::log(static_cast<double>(m[j]));
    }
    if (hmax <= 0) throw std::domain_error("shannon_normalized: undefined when all m_j = 1");
    return h / hmax;
}

enum class ScatterDirection { SigmaToEpsilon, EpsilonToSigma };

// Bijection between the Hamming scale sigma and the latent-class scatter
// epsilon = (m-1) / (e^{1/sigma} + m - 1), with inverse
// sigma = 1 / ln((m-1)(1-eps)/eps), valid for eps in (0, (m-1)/m).
inline double sigma_epsilon_convert(double value, int m, ScatterDirection dir) {
    if (m < 2) throw std::domain_error("sigma_epsilon_convert: requires m >= 2");
    if (dir == ScatterDirection::SigmaToEpsilon) {
        if (!(value > 0)) throw std::domain_error("sigma_epsilon_convert: sigma must be > 0");
        return (m - 1) / (std::exp(1.0 / value) + m - 1);
    }
    const double upper = (m - 1.0) / m;
    if (!(value > 0) || !(value < upper))
        throw std::domain_error("sigma_epsilon_convert: epsilon must lie in (0,(m-1)/m)");
    return 1.0 / std::log((m - 1) * (1.0 - value) / value);
}

}  // namespace hammix
