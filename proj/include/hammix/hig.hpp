// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hamming.hpp"
#include "logspace.hpp"
#include "quadrature.hpp"
#include "rng.hpp"
#include "special.hpp"

namespace hammix {

// Hyperparameters of the scale prior for a variable with m modalities.
// v plays the role of prior observations agreeing with the center, w of
// prior observations differing from it.
struct HigParams {
    double v = 1.0;
    double w = 1.0;
    int m = 2;
};

// Defaults keyed by modality count; chosen so the prior pushforward of the
// normalized Gini index is close to uniform.
inline HigParams default_hig_for_m(int m) {
    switch (m) {
        case 2: return {6.0, 0.25, 2};
        case 3: return {5.0, 0.25, 3};
        case 4: return {4.5, 0.25, 4};
        case 5: return {4.25, 0.25, 5};
        default: return {3.0, 0.5, m};  // 6-level default, reused beyond the table
    }
}

namespace detail {

// log of the unnormalized omega-density g(w|v,w) = (1+(m-1)o)^-(v+w) o^w.
inline double hig_omega_log_kernel(double omega, double v, double w, int m) {
    const double t1 = w > 0 ? w * std::log(omega) : 0.0;
    return t1 - (v + w) * std::log1p((m - 1) * omega);
}

// ln I(v,w) without positivity checks on v (the mean formula needs v-1).
inline double hig_norm_const_log_raw(double v, double w, int m) {
    if (m < 1) throw std::domain_error("hig: m >= 1");
    if (m == 1) return -std::log1p(w);
    const double z = (m - 1.0) / m;
    return -(v + w) * std::log(static_cast<double>(m)) - std::log1p(w) +
           gauss_2f1_1bc_log(v + w, w + 2.0, z);
}

}  // namespace detail

inline void validate_hig(const HigParams& hp) {
    if (!(hp.v > 0) || !(hp.w > 0)) throw std::domain_error("hig: v, w must be > 0");
    if (hp.m < 1) throw std::domain_error("hig: m >= 1");
}

// ln I(v,w), I(v,w) = int_0^1 (1+(m-1)o)^-(v+w) o^w do
//                   = m^-(v+w)/(w+1) 2F1(1, v+w; w+2; (m-1)/m).
// Tolerates the w = 0 boundary (the integral stays finite there).
inline double hig_norm_const_log(const HigParams& hp) {
    if (!(hp.v > 0) || !(hp.w >= 0)) throw std::domain_error("hig: v > 0 and w >= 0 required");
    if (hp.m < 1) throw std::domain_error("hig: m >= 1");
    return detail::hig_norm_const_log_raw(hp.v, hp.w, hp.m);
}

// ln f(sigma | v,w) = -ln I - (v+w) ln(1+(m-1)e^{-1/s}) - (w+1)/s - 2 ln s.
inline double hig_log_density_sigma(double sigma, const HigParams& hp) {
    validate_hig(hp);
    if (!(sigma > 0)) throw std::domain_error("hig: sigma must be > 0");
    return -hig_norm_const_log(hp) - (hp.v + hp.w) * std::log1p((hp.m - 1) * std::exp(-1.0 / sigma)) -
           (hp.w + 1.0) / sigma - 2.0 * std::log(sigma);
}

// P(omega <= omega_tilde) by adaptive quadrature of the unnormalized
// omega-density; this is the authoritative CDF.
inline double omega_cdf(double omega_tilde, const HigParams& hp) {
    validate_hig(hp);
    if (!(omega_tilde >= 0.0) || !(omega_tilde <= 1.0))
        throw std::domain_error("omega_cdf: omega_tilde in [0,1]");
    if (omega_tilde == 0.0) return 0.0;
    if (omega_tilde == 1.0) return 1.0;
    const auto logg = [&](double o) { return detail::hig_omega_log_kernel(o, hp.v, hp.w, hp.m); };
    const double log_num = integrate_adaptive_log(logg, 0.0, omega_tilde, 1e-11);
    const double log_den = integrate_adaptive_log(logg, 0.0, 1.0, 1e-11);
    return std::min(1.0, std::exp(log_num - log_den));
}

// Closed form of the same CDF via the Pfaff-transformed incomplete
// integral,
//   P(o <= t) = t^{w+1} (1+(m-1)t)^-(v+w)
//               * 2F1(1, v+w; w+2; (m-1)t/((m-1)t+1)) / ((w+1) I(v,w)).
// Kept as a cross-check of the quadrature CDF.
inline double omega_cdf_closed(double omega_tilde, const HigParams& hp) {
    validate_hig(hp);
    if (!(omega_tilde >= 0.0) || !(omega_tilde <= 1.0))
        throw std::domain_error("omega_cdf_closed: omega_tilde in [0,1]");
    if (omega_tilde == 0.0) return 0.0;
    const double mt = (hp.m - 1) * omega_tilde;
    const double z = mt / (mt + 1.0);
    const double lf = (hp.w + 1.0) * std::log(omega_tilde) - (hp.v + hp.w) * std::log1p(mt) +
                      gauss_2f1_1bc_log(hp.v + hp.w, hp.w + 2.0, z) - std::log1p(hp.w) -
                      hig_norm_const_log(hp);
    return std::min(1.0, std::exp(lf));
}

namespace detail {

struct CdfPanel {
    double a, b, value, error;
    bool operator<(const CdfPanel& o) const { return error < o.error; }
};

// Piecewise quadrature table of the unnormalized omega-density, scaled by
// the density maximum so all panel arithmetic stays in a safe linear
// range. Built per draw: the posterior (v*, w*) changes every time.
class HigOmegaCdf {
public:
    HigOmegaCdf(double v, double w, int m)
        : v_(v), w_(w), m_(m) {
        const double lo = 1e-15, hi = 1.0 - 1e-15;
        double mode = m > 1 ? w / (v * (m - 1)) : 1.0;
        mode = std::clamp(mode, 1e-12, 1.0);
        log_scale_ = std::max({kernel_log(mode), kernel_log(lo), kernel_log(hi)});
        std::vector<double> cuts{lo};
        for (double c : {mode / 8, mode / 2, mode, 2 * mode, 8 * mode, 0.5 * (1 + mode)})
            if (c > lo && c < hi) cuts.push_back(c);
        cuts.push_back(hi);
        std::sort(cuts.begin(), cuts.end());
        std::priority_queue<CdfPanel> q;
        double total = 0, err = 0;
        for (size_t i = 0; i + 1 < cuts.size(); ++i) {
            auto p = make_panel(cuts[i], cuts[i + 1]);
            total += p.value;
            err += p.error;
            q.push(p);
        }
        int budget = 400;
        while (err > 1e-12 * total && budget-- > 0) {
            CdfPanel worst = q.top();
            const double mid = 0.5 * (worst.a + worst.b);
            if (mid <= worst.a || mid >= worst.b) break;
            q.pop();
            total -= worst.value;
            err -= worst.error;
            for (auto p : {make_panel(worst.a, mid), make_panel(mid, worst.b)}) {
                total += p.value;
                err += p.error;
                q.push(p);
            }
        }
        panels_.reserve(q.size());
        while (!q.empty()) {
            panels_.push_back(q.top());
            q.pop();
        }
        std::sort(panels_.begin(), panels_.end(),
                  [](const CdfPanel& x, const CdfPanel& y) { return x.a < y.a; });
        cum_.resize(panels_.size() + 1, 0.0);
        for (size_t i = 0; i < panels_.size(); ++i) cum_[i + 1] = cum_[i] + panels_[i].value;
    }

    double total_mass() const { return cum_.back(); }

    // Solve CDF(omega) = u for omega, to xtol in omega.
    double invert(double u, double xtol) const {
        const double target = u * total_mass();
        size_t i = std::upper_bound(cum_.begin(), cum_.end(), target) - cum_.begin();
        i = i == 0 ? 0 : i - 1;
        if (i >= panels_.size()) i = panels_.size() - 1;
        const CdfPanel& p = panels_[i];
        const double local = target - cum_[i];
        if (local <= 0) return p.a;
        if (local >= p.value) return p.b;
        const auto f = [&](double x) { return partial(p.a, x) - local; };
        return find_root(f, p.a, p.b, xtol);
    }

private:
    double kernel_log(double o) const { return hig_omega_log_kernel(o, v_, w_, m_); }
    double scaled(double o) const { return std::exp(kernel_log(o) - log_scale_); }

    CdfPanel make_panel(double a, double b) const {
        auto p = gk15_panel([this](double o) { return scaled(o); }, a, b);
        return {p.a, p.b, p.value, p.error};
    }

    double partial(double a, double x) const {
        if (x <= a) return 0.0;
        return gk15_panel([this](double o) { return scaled(o); }, a, x).value;
    }

    double v_, w_;
    int m_;
    double log_scale_ = 0.0;
    std::vector<CdfPanel> panels_;
    std::vector<double> cum_;
};

}  // namespace detail

// Inversion sampling: draw u ~ U(0,1) and solve CDF(omega) = u on the
// quadrature CDF (bracket [1e-15, 1-1e-15], tolerance 1e-10 in omega),
// then map sigma = -1/ln(omega). Sampled scales are floored at 1e-12.
inline double hig_sample_sigma(const HigParams& hp, RngStream& rng) {
    validate_hig(hp);
    const detail::HigOmegaCdf cdf(hp.v, hp.w, hp.m);
    const double omega = cdf.invert(rng.uniform(), 1e-10);
    const double sigma = -1.0 / std::log(omega);
    return std::max(sigma, kSigmaFloor);
}

// Full-conditional update: v* = v + matches, w* = w + (n - matches).
inline HigParams hig_posterior(const HigParams& hp, int n, int match_count) {
    if (n < 0 || match_count < 0 || match_count > n)
        throw std::invalid_argument("hig_posterior: need 0 <= match_count <= n");
    return {hp.v + match_count, hp.w + (n - match_count), hp.m};
}

// Prior mean and mode of omega = exp(-1/sigma). The mean is the ratio of
// normalizing integrals with the omega exponent raised by one,
// E[omega] = I(v-1, w+1)/I(v, w); the mode is w/(v(m-1)) capped at 1.
inline std::pair<double, double> omega_mean_and_mode(const HigParams& hp) {
    validate_hig(hp);
    const double mean = std::exp(detail::hig_norm_const_log_raw(hp.v - 1.0, hp.w + 1.0, hp.m) -
                                 hig_norm_const_log(hp));
    const double mode = (hp.m > 1 && hp.w < hp.v * (hp.m - 1)) ? hp.w / (hp.v * (hp.m - 1)) : 1.0;
    return {mean, mode};
}

// ln of the marginal likelihood contribution of one variable given its
// center: ln I(v*, w*) - ln I(v, w).
inline double marginal_loglik_column(const std::vector<int>& column, int center,
                                     const HigParams& hp) {
    validate_hig(hp);
    int matches = 0;
    for (int x : column) {
        if (x < 0 || x >= hp.m) throw std::invalid_argument("marginal_loglik: code out of range");
        matches += x == center;
    }
    const HigParams post = hig_posterior(hp, static_cast<int>(column.size()), matches);
    return hig_norm_const_log(post) - hig_norm_const_log(hp);
}

// Monte Carlo pushforward of the prior onto the normalized Gini index:
// one scale is drawn per variable per replicate.
inline std::vector<double> gini_prior_montecarlo(const std::vector<HigParams>& priors, int draws,
                                                 RngStream& rng) {
    if (draws < 1) throw std::invalid_argument("gini_prior_montecarlo: draws >= 1");
    std::vector<int> m(priors.size());
    for (size_t j = 0; j < priors.size(); ++j) m[j] = priors[j].m;
    std::vector<double> out(draws);
    std::vector<double> sigma(priors.size());
    for (int d = 0; d < draws; ++d) {
        for (size_t j = 0; j < priors.size(); ++j) sigma[j] = hig_sample_sigma(priors[j], rng);
        out[d] = gini_normalized(sigma, m);
    }
    return out;
}

}  // namespace hammix
