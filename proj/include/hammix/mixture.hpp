// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "hamming.hpp"
#include "hig.hpp"
#include "logspace.hpp"
#include "rng.hpp"
#include "special.hpp"

namespace hammix {

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Model hyperparameters: Dirichlet/Gamma shape gamma, Poisson intensity
// lambda for L-1, per-variable scale priors, and the shared-scale options.
struct ModelConfig {
    double gamma = 1.0;
    double lambda = 1.0;
    std::vector<HigParams> hig_priors;
    bool shared_sigma = false;
    double shared_sigma_a = 2.0;  // inverse-gamma shape (unequal-m fallback)
    double shared_sigma_b = 1.0;  // inverse-gamma scale
    double mh_proposal_sd = 0.1;

    void validate() const {
        if (!(gamma > 0) || !(lambda > 0))
            throw std::invalid_argument("config: gamma and lambda must be > 0");
        if (!(shared_sigma_a > 0) || !(shared_sigma_b > 0) || !(mh_proposal_sd > 0))
            throw std::invalid_argument("config: shared-sigma settings must be > 0");
        for (const auto& hp : hig_priors) validate_hig(hp);
    }
};

inline ModelConfig default_config_for(const std::vector<int>& modality_counts, double gamma,
                                      double lambda) {
    ModelConfig cfg;
    cfg.gamma = gamma;
    cfg.lambda = lambda;
    for (int m : modality_counts) cfg.hig_priors.push_back(default_hig_for_m(m));
    return cfg;
}

// Block sizes (n_1, ..., n_K) of a partition of n items.
struct PartitionSizes {
    std::vector<int> sizes;

    int n() const { return std::accumulate(sizes.begin(), sizes.end(), 0); }
    int k() const { return static_cast<int>(sizes.size()); }
};

// ln eppf(n_1..n_K) = ln V(n,K) + sum_k [ln G(gamma+n_k) - ln G(gamma)].
inline double eppf_log(const PartitionSizes& sizes, const ModelConfig& cfg) {
    if (sizes.k() < 1) throw std::invalid_argument("eppf_log: need at least one block");
    for (int nk : sizes.sizes)
        if (nk < 1) throw std::invalid_argument("eppf_log: block sizes must be positive");
    double lp = v_integral_log(sizes.n(), sizes.k(), cfg.gamma, cfg.lambda);
    for (int nk : sizes.sizes) lp += log_gamma(cfg.gamma + nk) - log_gamma(cfg.gamma);
    return lp;
}

struct PriorK {
    std::vector<double> pmf;  // pmf[K-1] = P(K), K = 1..n
    double defect;            // |raw sum - 1| before renormalization

    double mean() const {
        double s = 0;
        for (size_t i = 0; i < pmf.size(); ++i) s += (i + 1.0) * pmf[i];
        return s;
    }
    int mode() const {
        return 1 + static_cast<int>(std::max_element(pmf.begin(), pmf.end()) - pmf.begin());
    }
};

// Marginal prior on the number of clusters:
// P(K) = V(n,K) * D(n,K), D the sign-folded factorial coefficient.
// The raw sum is checked against 1 and the vector renormalized.
inline PriorK prior_k_pmf(int n, const ModelConfig& cfg) {
    if (n < 1) throw std::invalid_argument("prior_k_pmf: n >= 1");
    const auto log_d = gen_factorial_coeff_log_row(n, cfg.gamma);
    std::vector<double> lp(n);
    double log_sum = kNegInf;
    for (int K = 1; K <= n; ++K) {
        lp[K - 1] = v_integral_log(n, K, cfg.gamma, cfg.lambda) + log_d[K];
        log_sum = log_add(log_sum, lp[K - 1]);
    }
    const double defect = std::abs(std::expm1(log_sum));
    if (defect > 1e-4)
        throw NumericError("prior_k_pmf: normalization defect " + std::to_string(defect));
    PriorK out;
    out.defect = defect;
    out.pmf.resize(n);
    for (int K = 1; K <= n; ++K) out.pmf[K - 1] = std::exp(lp[K - 1] - log_sum);
    return out;
}

enum class CenterStatistic { Mean, Mode };

// Finds gamma so that the prior on K is centered (mean or mode) on
// k_target at the given n and lambda. The prior mean of K is increasing
// in gamma, so bisection on ln(gamma) applies.
inline double elicit_gamma(int n, double lambda, int k_target,
                           CenterStatistic stat = CenterStatistic::Mean) {
    if (k_target < 1 || k_target > n) throw std::invalid_argument("elicit_gamma: 1 <= K* <= n");
    const double g_lo = 1e-4, g_hi = 1e3;
    const auto stat_at = [&](double g) -> double {
        ModelConfig cfg;
        cfg.gamma = g;
        cfg.lambda = lambda;
        const PriorK pk = prior_k_pmf(n, cfg);
        return stat == CenterStatistic::Mean ? pk.mean() : pk.mode();
    };
    const double f_lo = stat_at(g_lo), f_hi = stat_at(g_hi);
    if (k_target < f_lo - 0.05 || k_target > f_hi + 0.05)
        throw std::domain_error("elicit_gamma: K* = " + std::to_string(k_target) +
                                " unreachable; achievable range [" + std::to_string(f_lo) + ", " +
                                std::to_string(f_hi) + "]");
    double llo = std::log(g_lo), lhi = std::log(g_hi);
    if (stat == CenterStatistic::Mean) {
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (llo + lhi);
            const double fm = stat_at(std::exp(mid));
            if (std::abs(fm - k_target) <= 0.05) return std::exp(mid);
            (fm < k_target ? llo : lhi) = mid;
            if (lhi - llo < 1e-12) break;
        }
        throw NumericError("elicit_gamma: bisection failed to match the prior mean");
    }
    // mode: step function, nondecreasing; report the smallest bracketing gamma
    for (int it = 0; it < 100 && lhi - llo > 1e-6; ++it) {
        const double mid = 0.5 * (llo + lhi);
        (stat_at(std::exp(mid)) < k_target ? llo : lhi) = mid;
    }
    const double g = std::exp(lhi);
    if (static_cast<int>(stat_at(g)) != k_target)
        throw std::domain_error("elicit_gamma: no gamma attains mode " + std::to_string(k_target));
    return g;
}

// One draw from the full generative model: component count, weights,
// allocations, component parameters, and data.
struct GenerativeDraw {
    CategoricalDataset data;
    std::vector<int> truth;           // cluster labels 0..K-1, first-appearance order
    int k = 0;                        // number of allocated components
    int total_components = 0;         // L
    std::vector<HammingParams> components;  // allocated only, in truth-label order
};

inline GenerativeDraw sample_generative(int n, int p, const std::vector<int>& modality_counts,
                                        const ModelConfig& cfg, RngStream& rng) {
    if (n < 1 || p < 1 || static_cast<int>(modality_counts.size()) != p)
        throw std::invalid_argument("sample_generative: bad dimensions");
    const int L = 1 + rand_poisson(cfg.lambda, rng);
    std::vector<double> s(L);
    double total = 0;
    for (int l = 0; l < L; ++l) total += s[l] = rand_gamma(cfg.gamma, 1.0, rng);
    std::vector<HammingParams> comps(L);
    for (int l = 0; l < L; ++l) {
        comps[l].center.resize(p);
        comps[l].scale.resize(p);
        for (int j = 0; j < p; ++j) {
            comps[l].center[j] = static_cast<int>(rng.uniform_below(modality_counts[j]));
            const HigParams hp = cfg.hig_priors.empty() ? default_hig_for_m(modality_counts[j])
                                                        : cfg.hig_priors[j];
            comps[l].scale[j] = hig_sample_sigma(hp, rng);
        }
    }
    std::vector<int> z(n);
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform() * total, acc = 0;
        int pick = L - 1;
        for (int l = 0; l < L; ++l) {
            acc += s[l];
            if (u <= acc) {
                pick = l;
                break;
            }
        }
        z[i] = pick;
    }
    GenerativeDraw out;
    out.total_components = L;
    // relabel allocated components by first appearance
    std::vector<int> relabel(L, -1);
    out.truth.resize(n);
    for (int i = 0; i < n; ++i) {
        if (relabel[z[i]] < 0) {
            relabel[z[i]] = out.k++;
            out.components.push_back(comps[z[i]]);
        }
        out.truth[i] = relabel[z[i]];
    }
    // assemble the dataset with full alphabets (levels may be unobserved)
    out.data.n = n;
    out.data.p = p;
    out.data.alphabets.resize(p);
    out.data.variable_names.resize(p);
    for (int j = 0; j < p; ++j) {
        out.data.variable_names[j] = "V" + std::to_string(j + 1);
        for (int h = 0; h < modality_counts[j]; ++h)
            out.data.alphabets[j].labels.push_back(std::to_string(h));
    }
    out.data.codes.reserve(static_cast<size_t>(n) * p);
    for (int i = 0; i < n; ++i) {
        const auto x = hamming_sample(out.components[out.truth[i]], modality_counts, rng);
        out.data.codes.insert(out.data.codes.end(), x.begin(), x.end());
    }
    return out;
}

}  // namespace hammix
