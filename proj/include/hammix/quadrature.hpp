// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "logspace.hpp"

namespace hammix {

struct QuadratureError : std::runtime_error {
    double achieved;
    QuadratureError(const std::string& what, double achieved_)
        : std::runtime_error(what), achieved(achieved_) {}
};

namespace detail {

// 15-point Kronrod rule with embedded 7-point Gauss rule (QUADPACK dqk15).
inline constexpr double kGk15X[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691, 0.7415311855993944,
    0.5860872354676911, 0.4058451513773972, 0.2077849550078985, 0.0};
inline constexpr double kGk15Wk[8] = {
    0.0229353220105292, 0.0630920926299786, 0.1047900103222502, 0.1406532597155259,
    0.1690047266392679, 0.1903505780647854, 0.2044329400752989, 0.2094821410847278};
inline constexpr double kGk15Wg[4] = {
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189, 0.4179591836734694};

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

// Panel in log space: value and error carried as logs of positive numbers.
struct LogPanel {
    double a, b, log_value, log_error;
    bool operator<(const LogPanel& o) const { return log_error < o.log_error; }
};

template <class F>
inline Panel gk15_panel(const F& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(c - h * kGk15X[i]);
        fv[14 - i] = f(c + h * kGk15X[i]);
    }
    fv[7] = f(c);
    double k15 = 0, g7 = 0;
    for (int i = 0; i < 7; ++i) k15 += kGk15Wk[i] * (fv[i] + fv[14 - i]);
    k15 += kGk15Wk[7] * fv[7];
    for (int i = 0; i < 3; ++i) g7 += kGk15Wg[i] * (fv[2 * i + 1] + fv[13 - 2 * i]);
    g7 += kGk15Wg[3] * fv[7];
    return {a, b, h * k15, h * std::abs(k15 - g7)};
}

// Same rule on a log-integrand; the panel is scaled by its maximum node
// value so the linear sums neither overflow nor flush to zero.
template <class F>
inline LogPanel gk15_log_panel(const F& logf, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double lf[15];
    for (int i = 0; i < 7; ++i) {
        lf[i] = logf(c - h * kGk15X[i]);
        lf[14 - i] = logf(c + h * kGk15X[i]);
    }
    lf[7] = logf(c);
    double m = lf[0];
    for (int i = 1; i < 15; ++i) m = std::max(m, lf[i]);
    if (m == kNegInf) return {a, b, kNegInf, kNegInf};
    double k15 = 0, g7 = 0;
    for (int i = 0; i < 7; ++i) k15 += kGk15Wk[i] * (std::exp(lf[i] - m) + std::exp(lf[14 - i] - m));
    k15 += kGk15Wk[7] * std::exp(lf[7] - m);
    for (int i = 0; i < 3; ++i)
        g7 += kGk15Wg[i] * (std::exp(lf[2 * i + 1] - m) + std::exp(lf[13 - 2 * i] - m));
    g7 += kGk15Wg[3] * std::exp(lf[7] - m);
    const double err = std::abs(k15 - g7);
    return {a, b, m + std::log(h * k15), err > 0 ? m + std::log(h * err) : kNegInf};
}

}  // namespace detail

struct QuadResult {
    double value;
    double error;
};

// Globally adaptive Gauss-Kronrod on [a, b]: splits the worst panel until
// the summed error estimate meets rel_tol * |value| + abs_tol. Running
// totals only steer refinement; the returned value is re-summed from the
// final panel set.
template <class F>
inline QuadResult integrate_adaptive(const F& f, double a, double b, double rel_tol = 1e-12,
                                     double abs_tol = 0.0, int max_panels = 2000) {
    std::priority_queue<detail::Panel> panels;
    panels.push(detail::gk15_panel(f, a, b));
    double total = panels.top().value, err = panels.top().error;
    int n = 1;
    while (err > rel_tol * std::abs(total) + abs_tol && n < max_panels) {
        detail::Panel worst = panels.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) break;  // interval exhausted
        panels.pop();
        total -= worst.value;
        err -= worst.error;
        for (detail::Panel p :
             {detail::gk15_panel(f, worst.a, mid), detail::gk15_panel(f, mid, worst.b)}) {
            total += p.value;
            err += p.error;
            panels.push(p);
        }
        ++n;
    }
    total = 0;
    err = 0;
    std::vector<detail::Panel> rest;
    while (!panels.empty()) {
        rest.push_back(panels.top());
        panels.pop();
    }
    std::sort(rest.begin(), rest.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
    for (const auto& p : rest) {
        total += p.value;
        err += p.error;
    }
    if (err > rel_tol * std::abs(total) + abs_tol)
        throw QuadratureError("adaptive quadrature did not reach tolerance", err);
    return {total, err};
}

// Log-space variant: integrates exp(logf) and returns the log of the
// integral. Node values combine by log-sum-exp, so the integrand may span
// thousands of orders of magnitude (and may have integrable endpoint
// singularities: nodes are strictly interior and refinement digs in).
template <class F>
inline double integrate_adaptive_log(const F& logf, double a, double b, double rel_tol = 1e-10,
                                     int max_panels = 4000) {
    std::priority_queue<detail::LogPanel> panels;
    panels.push(detail::gk15_log_panel(logf, a, b));
    double log_total = panels.top().log_value, log_err = panels.top().log_error;
    const double log_tol = std::log(rel_tol);
    int n = 1;
    while (log_err > log_tol + log_total && n < max_panels) {
        detail::LogPanel worst = panels.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) break;
        panels.pop();
        // approximate removal; exact totals are re-summed at the end
        log_total = worst.log_value >= log_total ? kNegInf : log_sub(log_total, worst.log_value);
        log_err = worst.log_error >= log_err ? kNegInf : log_sub(log_err, worst.log_error);
        for (detail::LogPanel p :
             {detail::gk15_log_panel(logf, worst.a, mid), detail::gk15_log_panel(logf, mid, worst.b)}) {
            log_total = log_add(log_total, p.log_value);
            log_err = log_add(log_err, p.log_error);
            panels.push(p);
        }
        ++n;
    }
    log_total = kNegInf;
    log_err = kNegInf;
    while (!panels.empty()) {
        log_total = log_add(log_total, panels.top().log_value);
        log_err = log_add(log_err, panels.top().log_error);
        panels.pop();
    }
    if (log_err > log_tol + log_total)
        throw QuadratureError("log-space quadrature did not reach tolerance",
                              std::exp(log_err - log_total));
    return log_total;
}

// Bracketed root finding, bisection with secant acceleration. f(lo) and
// f(hi) must have opposite signs. Converges to |hi - lo| <= xtol.
template <class F>
inline double find_root(const F& f, double lo, double hi, double xtol, int max_iter = 200) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0) return lo;
    if (fhi == 0) return hi;
    if ((flo > 0) == (fhi > 0)) throw std::domain_error("find_root: endpoints do not bracket");
    for (int it = 0; it < max_iter && hi - lo > xtol; ++it) {
        double mid = 0.5 * (lo + hi);
        if (fhi != flo) {
            const double sec = lo - flo * (hi - lo) / (fhi - flo);
            if (sec > lo + 0.01 * (hi - lo) && sec < hi - 0.01 * (hi - lo)) mid = sec;
        }
        const double fm = f(mid);
        if (fm == 0) return mid;
        if ((fm > 0) == (fhi > 0)) {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    if (hi - lo > xtol) throw std::runtime_error("find_root: no convergence");
    return 0.5 * (lo + hi);
}

}  // namespace hammix
