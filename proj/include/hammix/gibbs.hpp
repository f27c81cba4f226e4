// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "dataset.hpp"
#include "hamming.hpp"
#include "hig.hpp"
#include "mixture.hpp"
#include "rng.hpp"

namespace hammix {

// Full sampler state. Internally labels are 0-based; after relabeling the
// allocated components occupy slots 0..K-1 ordered by the smallest datum
// id among their members, and K..L-1 are empty.
struct MixtureState {
    int L = 0;
    int K = 0;
    std::vector<int> z;
    std::vector<double> S;
    std::vector<HammingParams> components;
    double u = 1.0;

    double total_weight() const { return std::accumulate(S.begin(), S.end(), 0.0); }
};

struct TraceRecord {
    long iteration = 0;
    int K = 0;
    int L = 0;
    double u = 0;
    double shared_sigma = std::numeric_limits<double>::quiet_NaN();
    std::vector<int> z;
    std::vector<HammingParams> components;  // allocated only
};

struct ChainTrace {
    std::vector<TraceRecord> records;
    std::uint64_t seed = 0;
    int chain_index = 0;
    long iters = 0, burnin = 0, thin = 1;
    int n = 0, p = 0;
    bool shared_sigma = false;
    long mh_accepted = 0, mh_proposed = 0;
    double seconds = 0;

    double mh_acceptance_rate() const {
        return mh_proposed > 0 ? static_cast<double>(mh_accepted) / mh_proposed : 0.0;
    }
};

// Per-sweep stream factory: every random decision is keyed by its purpose
// and, where applicable, by the identity of the datum / cluster / slot it
// concerns. Keying clusters by their smallest member datum id makes the
// draw sequence equivariant under row permutations (when the caller keeps
// datum ids attached to the rows).
class SweepRng {
public:
    SweepRng(const RngStream& chain_base, long iteration) : base_(chain_base), t_(iteration) {}

    RngStream scalar(std::uint64_t tag) const { return base_.derive(tag, t_); }
    RngStream for_datum(std::uint64_t id) const { return base_.derive(2, t_, id); }
    RngStream for_cluster(std::uint64_t tag, std::uint64_t min_id) const {
        return base_.derive(tag, t_, min_id);
    }

private:
    RngStream base_;
    std::uint64_t t_;
};

namespace keys {
inline constexpr std::uint64_t kInit = 0, kU = 1, kAlloc = 2, kWeightA = 3, kWeightNa = 4,
                               kNumNa = 5, kParamA = 6, kParamNa = 7, kSharedSigma = 8;
}

// Blocked Gibbs sampler for the Hamming mixture with a random number of
// components. Sweep order per iteration:
//   1. u | T                 ~ Gamma(n, T)
//   2. z_i | rest            ~ categorical, weight S_l p(x_i | c_l, s_l);
//      relabel allocated components to the front
//   3. L_na | rest           ~ two-component shifted-Poisson mixture
//   4. S | rest              ~ Gamma(gamma + n_k, u+1) / Gamma(gamma, u+1)
//   5. (c, sigma) | rest     ~ exact conjugate draws, allocated then empty
//   (+ shared-scale update when configured)
class GibbsSampler {
public:
    GibbsSampler(const CategoricalDataset& data, const ModelConfig& cfg,
                 std::vector<std::uint64_t> datum_ids = {})
        : data_(&data), cfg_(cfg), m_(data.modality_counts()), ids_(std::move(datum_ids)) {
        cfg_.validate();
        if (cfg_.hig_priors.empty())
            for (int mj : m_) cfg_.hig_priors.push_back(default_hig_for_m(mj));
        if (static_cast<int>(cfg_.hig_priors.size()) != data.p)
            throw std::invalid_argument("gibbs: one scale prior per variable required");
        if (ids_.empty()) {
            ids_.resize(data.n);
            std::iota(ids_.begin(), ids_.end(), 0);
        }
        if (static_cast<int>(ids_.size()) != data.n)
            throw std::invalid_argument("gibbs: datum id count mismatch");
        offsets_.resize(data.p + 1, 0);
        for (int j = 0; j < data.p; ++j) offsets_[j + 1] = offsets_[j] + m_[j];
        if (cfg_.shared_sigma) {
            equal_m_ = std::all_of(m_.begin(), m_.end(), [&](int mj) { return mj == m_[0]; });
        }
    }

    const ModelConfig& config() const { return cfg_; }
    bool shared_sigma_conjugate() const { return cfg_.shared_sigma && equal_m_; }

    MixtureState init_state(RngStream rng) const {
        const int n = data_->n, p = data_->p;
        MixtureState st;
        st.L = std::max<int>(1, std::min<long>(n, std::lround(1.0 + cfg_.lambda)));
        // provisional centers: distinct random rows; greedy nearest assignment
        std::vector<int> rows(n);
        std::iota(rows.begin(), rows.end(), 0);
        for (int l = 0; l < st.L; ++l)
            std::swap(rows[l], rows[l + rng.uniform_below(n - l)]);
        std::vector<double> sigma0(p);
        for (int j = 0; j < p; ++j) {
            double omega = omega_mean_and_mode(cfg_.hig_priors[j]).second;
            omega = std::min(omega, 0.99);
            sigma0[j] = -1.0 / std::log(omega);
        }
        if (cfg_.shared_sigma) {
            const double s = shared_sigma_conjugate()
                                 ? sigma0[0]
                                 : cfg_.shared_sigma_b / std::max(cfg_.shared_sigma_a - 1.0, 0.5);
            std::fill(sigma0.begin(), sigma0.end(), s);
        }
        st.components.resize(st.L);
        for (int l = 0; l < st.L; ++l) {
            st.components[l].center.assign(data_->row(rows[l]), data_->row(rows[l]) + p);
            st.components[l].scale = sigma0;
        }
        st.S.assign(st.L, cfg_.gamma);
        st.u = n / st.total_weight();
        st.z.resize(n);
        for (int i = 0; i < n; ++i) {
            int best = 0, best_d = hamming_distance(data_->row(i), st.components[0].center.data(), p);
            for (int l = 1; l < st.L; ++l) {
                const int d = hamming_distance(data_->row(i), st.components[l].center.data(), p);
                if (d < best_d) {
                    best = l;
                    best_d = d;
                }
            }
            st.z[i] = best;
        }
        return st;
    }

    // Rebuilds cluster sizes, per-cluster modality counts and min ids, and
    // applies the canonical relabeling. Call after constructing or
    // externally editing a state (or after replacing the data).
    void rebuild_tables(MixtureState& st) {
        sizes_.assign(st.L, 0);
        counts_.assign(static_cast<size_t>(st.L) * offsets_.back(), 0);
        for (int i = 0; i < data_->n; ++i) add_to_tables(st.z[i], i);
        relabel(st);
    }

    void step_u(MixtureState& st, RngStream rng) const {
        const double t = st.total_weight();
        if (!(t > 0)) throw std::logic_error("step_u: total weight must be positive");
        st.u = rand_gamma(data_->n, t, rng);
    }

    void step_allocations(MixtureState& st, const SweepRng& sweep) {
        const int n = data_->n, p = data_->p, L = st.L;
        // per-component constants of the log-pmf
        std::vector<double> base(L);
        std::vector<double> pen(static_cast<size_t>(L) * p);
        for (int l = 0; l < L; ++l) {
            double b = std::log(st.S[l]);
            for (int j = 0; j < p; ++j) {
                const double inv = 1.0 / st.components[l].scale[j];
                b -= std::log1p((m_[j] - 1) * std::exp(-inv));
                pen[static_cast<size_t>(l) * p + j] = inv;
            }
            base[l] = b;
        }
        std::vector<double> lw(L);
        for (int i = 0; i < n; ++i) {
            const int* x = data_->row(i);
            double mx = -std::numeric_limits<double>::infinity();
            for (int l = 0; l < L; ++l) {
                double v = base[l];
                const int* c = st.components[l].center.data();
                const double* pl = pen.data() + static_cast<size_t>(l) * p;
                for (int j = 0; j < p; ++j)
                    if (x[j] != c[j]) v -= pl[j];
                lw[l] = v;
                mx = std::max(mx, v);
            }
            double total = 0;
            for (int l = 0; l < L; ++l) total += lw[l] = std::exp(lw[l] - mx);
            RngStream r = sweep.for_datum(ids_[i]);
            const double u = r.uniform() * total;
            double acc = 0;
            int pick = L - 1;
            for (int l = 0; l < L; ++l) {
                acc += lw[l];
                if (u <= acc) {
                    pick = l;
                    break;
                }
            }
            if (pick != st.z[i]) {
                remove_from_tables(st.z[i], i);
                add_to_tables(pick, i);
                st.z[i] = pick;
            }
        }
        relabel(st);
    }

    void step_num_nonallocated(MixtureState& st, RngStream rng) {
        const double up1g = std::pow(st.u + 1.0, cfg_.gamma);
        const double lambda = cfg_.lambda / up1g;
        const double p_allocated_atom = up1g * st.K / (up1g * st.K + cfg_.lambda);
        const int shift = rng.uniform() < p_allocated_atom ? 0 : 1;
        const int l_na = shifted_poisson_sample(shift, lambda, rng);
        st.L = st.K + l_na;
        st.S.resize(st.L, 0.0);
        st.components.resize(st.L);
        for (int l = st.K; l < st.L; ++l) {
            st.components[l].center.assign(data_->p, 0);
            st.components[l].scale.assign(data_->p, 1.0);  // placeholder until step 5
        }
        sizes_.resize(st.L, 0);
        counts_.resize(static_cast<size_t>(st.L) * offsets_.back(), 0);
    }

    void step_weights(MixtureState& st, const SweepRng& sweep) const {
        for (int k = 0; k < st.K; ++k) {
            RngStream r = sweep.for_cluster(keys::kWeightA, min_ids_[k]);
            st.S[k] = rand_gamma(cfg_.gamma + sizes_[k], st.u + 1.0, r);
        }
        for (int l = st.K; l < st.L; ++l) {
            RngStream r = sweep.for_cluster(keys::kWeightNa, static_cast<std::uint64_t>(l));
            st.S[l] = rand_gamma(cfg_.gamma, st.u + 1.0, r);
        }
    }

    // Allocated components: center codes from the m_j-point full
    // conditional with weight exp(count(h)/sigma), then scales from the
    // conjugate posterior at the fresh center (skipped in shared mode).
    void step_params_allocated(MixtureState& st, const SweepRng& sweep) const {
        const int p = data_->p;
        for (int k = 0; k < st.K; ++k) {
            RngStream r = sweep.for_cluster(keys::kParamA, min_ids_[k]);
            for (int j = 0; j < p; ++j) {
                const int* cnt = counts_.data() + static_cast<size_t>(k) * offsets_.back() + offsets_[j];
                const int c_new = draw_center(cnt, m_[j], st.components[k].scale[j], r);
                st.components[k].center[j] = c_new;
                if (!cfg_.shared_sigma) {
                    const HigParams post = hig_posterior(cfg_.hig_priors[j], sizes_[k], cnt[c_new]);
                    st.components[k].scale[j] = hig_sample_sigma(post, r);
                }
            }
        }
    }

    void step_params_nonallocated(MixtureState& st, const SweepRng& sweep) const {
        const int p = data_->p;
        for (int l = st.K; l < st.L; ++l) {
            RngStream r = sweep.for_cluster(keys::kParamNa, static_cast<std::uint64_t>(l));
            for (int j = 0; j < p; ++j)
                st.components[l].center[j] = static_cast<int>(r.uniform_below(m_[j]));
            if (!cfg_.shared_sigma) {
                for (int j = 0; j < p; ++j)
                    st.components[l].scale[j] = hig_sample_sigma(cfg_.hig_priors[j], r);
            }
        }
    }

    // Common per-component scale. With equal modality counts the update is
    // the exact conjugate draw; otherwise one random-walk Metropolis step
    // on ln(sigma) targets inverse-gamma(a,b) prior times the component
    // likelihood. Fresh empty slots start from a prior draw.
    void step_shared_sigma(MixtureState& st, const SweepRng& sweep, ChainTrace* trace) const {
        const int p = data_->p;
        for (int l = 0; l < st.L; ++l) {
            const bool allocated = l < st.K;
            RngStream r = sweep.for_cluster(keys::kSharedSigma,
                                            allocated ? min_ids_[l] : static_cast<std::uint64_t>(l));
            double sigma;
            if (equal_m_) {
                const int mismatches = allocated ? total_mismatches(st, l) : 0;
                const int np = allocated ? sizes_[l] * p : 0;
                const HigParams hp = cfg_.hig_priors[0];
                sigma = hig_sample_sigma({hp.v + (np - mismatches), hp.w + mismatches, hp.m}, r);
            } else {
                double cur = st.components[l].scale[0];
                if (!allocated) cur = 1.0 / rand_gamma(cfg_.shared_sigma_a, cfg_.shared_sigma_b, r);
                sigma = mh_shared_sigma(st, l, cur, r, trace);
            }
            std::fill(st.components[l].scale.begin(), st.components[l].scale.end(), sigma);
        }
    }

    void sweep(MixtureState& st, long iteration, const RngStream& chain_base,
               ChainTrace* trace = nullptr) {
        const SweepRng s(chain_base, iteration);
        step_u(st, s.scalar(keys::kU));
        step_allocations(st, s);
        step_num_nonallocated(st, s.scalar(keys::kNumNa));
        step_weights(st, s);
        step_params_allocated(st, s);
        step_params_nonallocated(st, s);
        if (cfg_.shared_sigma) step_shared_sigma(st, s, trace);
        check_invariants(st);
    }

    ChainTrace run(long iters, long burnin, long thin, std::uint64_t seed, int chain_index = 0) {
        if (!(iters > burnin) || burnin < 0 || thin < 1)
            throw std::invalid_argument("run: need iters > burnin >= 0 and thin >= 1");
        const auto t0 = std::chrono::steady_clock::now();
        ChainTrace trace;
        trace.seed = seed;
        trace.chain_index = chain_index;
        trace.iters = iters;
        trace.burnin = burnin;
        trace.thin = thin;
        trace.n = data_->n;
        trace.p = data_->p;
        trace.shared_sigma = cfg_.shared_sigma;
        const RngStream chain_base =
            RngStream(seed).derive(0xc8a1, static_cast<std::uint64_t>(chain_index));
        MixtureState st = init_state(chain_base.derive(keys::kInit, 0));
        rebuild_tables(st);
        trace.records.reserve((iters - burnin) / thin);
        for (long t = 1; t <= iters; ++t) {
            sweep(st, t, chain_base, &trace);
            if (t > burnin && (t - burnin) % thin == 0) trace.records.push_back(make_record(st, t));
        }
        trace.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return trace;
    }

    // Sweeps only the allocated-component parameter block with the
    // allocation vector frozen; used for conditional posterior summaries.
    void sweep_params_given_partition(MixtureState& st, long iteration,
                                      const RngStream& base, ChainTrace* trace = nullptr) {
        const SweepRng s(base, iteration);
        step_params_allocated(st, s);
        if (cfg_.shared_sigma) step_shared_sigma(st, s, trace);
    }

    void check_invariants(const MixtureState& st) const {
#ifndef NDEBUG
        assert(st.L >= 1 && st.K >= 1 && st.K <= st.L);
        assert(static_cast<int>(st.z.size()) == data_->n);
        std::vector<int> sz(st.L, 0);
        for (int zi : st.z) {
            assert(zi >= 0 && zi < st.K);
            ++sz[zi];
        }
        for (int k = 0; k < st.K; ++k) assert(sz[k] > 0 && sz[k] == sizes_[k]);
        assert(st.total_weight() > 0);
        for (const auto& comp : st.components)
            for (double sgm : comp.scale) assert(sgm > 0);
#else
        (void)st;
#endif
    }

    const std::vector<int>& cluster_sizes() const { return sizes_; }
    int cluster_count(int k, int j, int h) const {
        return counts_[static_cast<size_t>(k) * offsets_.back() + offsets_[j] + h];
    }

    // One random-walk Metropolis move of the shared scale of component l,
    // from the point `cur`; with no members the target is the prior.
    double mh_shared_sigma(const MixtureState& st, int l, double cur, RngStream& r,
                           ChainTrace* trace = nullptr) const {
        const auto log_target = [&](double sigma) {
            // inverse-gamma(a,b) prior on sigma plus the component likelihood
            double lp = -(cfg_.shared_sigma_a + 1.0) * std::log(sigma) - cfg_.shared_sigma_b / sigma;
            if (l < st.K && sizes_[l] > 0) {
                lp -= total_mismatches(st, l) / sigma;
                double norm = 0;
                for (int j = 0; j < data_->p; ++j)
                    norm += std::log1p((m_[j] - 1) * std::exp(-1.0 / sigma));
                lp -= sizes_[l] * norm;
            }
            return lp;
        };
        const double prop = cur * std::exp(rand_normal(0.0, cfg_.mh_proposal_sd, r));
        const double log_acc =
            log_target(prop) + std::log(prop) - log_target(cur) - std::log(cur);
        if (trace) ++trace->mh_proposed;
        if (std::log(r.uniform()) < log_acc) {
            if (trace) ++trace->mh_accepted;
            return prop;
        }
        return cur;
    }

private:
    TraceRecord make_record(const MixtureState& st, long t) const {
        TraceRecord rec;
        rec.iteration = t;
        rec.K = st.K;
        rec.L = st.L;
        rec.u = st.u;
        rec.z = st.z;
        rec.components.assign(st.components.begin(), st.components.begin() + st.K);
        if (cfg_.shared_sigma) {
            double s = 0;
            for (int k = 0; k < st.K; ++k) s += st.components[k].scale[0];
            rec.shared_sigma = s / st.K;
        }
        return rec;
    }

    static int draw_center(const int* counts, int m, double sigma, RngStream& rng) {
        int cmax = 0;
        for (int h = 1; h < m; ++h)
            if (counts[h] > counts[cmax]) cmax = h;
        double total = 0;
        double wts[64];
        double* w = m <= 64 ? wts : new double[m];
        for (int h = 0; h < m; ++h) total += w[h] = std::exp((counts[h] - counts[cmax]) / sigma);
        const double u = rng.uniform() * total;
        double acc = 0;
        int pick = m - 1;
        for (int h = 0; h < m; ++h) {
            acc += w[h];
            if (u <= acc) {
                pick = h;
                break;
            }
        }
        if (w != wts) delete[] w;
        return pick;
    }

    int total_mismatches(const MixtureState& st, int k) const {
        int matches = 0;
        for (int j = 0; j < data_->p; ++j)
            matches += cluster_count(k, j, st.components[k].center[j]);
        return sizes_[k] * data_->p - matches;
    }

    void add_to_tables(int l, int i) {
        ++sizes_[l];
        const int* x = data_->row(i);
        int* cnt = counts_.data() + static_cast<size_t>(l) * offsets_.back();
        for (int j = 0; j < data_->p; ++j) ++cnt[offsets_[j] + x[j]];
    }

    void remove_from_tables(int l, int i) {
        --sizes_[l];
        const int* x = data_->row(i);
        int* cnt = counts_.data() + static_cast<size_t>(l) * offsets_.back();
        for (int j = 0; j < data_->p; ++j) --cnt[offsets_[j] + x[j]];
    }

    // Moves the allocated components to slots 0..K-1, ordered by smallest
    // member datum id; parameters, weights and tables follow their members.
    void relabel(MixtureState& st) {
        const int L = st.L;
        std::vector<std::uint64_t> min_id(L, ~std::uint64_t(0));
        for (int i = 0; i < data_->n; ++i)
            min_id[st.z[i]] = std::min(min_id[st.z[i]], ids_[i]);
        std::vector<int> order;
        for (int l = 0; l < L; ++l)
            if (sizes_[l] > 0) order.push_back(l);
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return min_id[a] < min_id[b]; });
        st.K = static_cast<int>(order.size());
        for (int l = 0; l < L; ++l)
            if (sizes_[l] == 0) order.push_back(l);
        std::vector<int> new_of_old(L);
        for (int pos = 0; pos < L; ++pos) new_of_old[order[pos]] = pos;
        apply_permutation(st.S, order);
        apply_permutation(st.components, order);
        apply_permutation(sizes_, order);
        const int width = offsets_.back();
        std::vector<int> counts_new(counts_.size());
        for (int pos = 0; pos < L; ++pos)
            std::copy_n(counts_.begin() + static_cast<size_t>(order[pos]) * width, width,
                        counts_new.begin() + static_cast<size_t>(pos) * width);
        counts_.swap(counts_new);
        for (int& zi : st.z) zi = new_of_old[zi];
        min_ids_.resize(st.K);
        for (int k = 0; k < st.K; ++k) min_ids_[k] = min_id[order[k]];
    }

    template <class T>
    static void apply_permutation(std::vector<T>& v, const std::vector<int>& order) {
        std::vector<T> out;
        out.reserve(v.size());
        for (int idx : order) out.push_back(std::move(v[idx]));
        v.swap(out);
    }

    const CategoricalDataset* data_;
    ModelConfig cfg_;
    std::vector<int> m_;
    std::vector<std::uint64_t> ids_;
    std::vector<int> offsets_;
    bool equal_m_ = false;

    // workspace bound to the current state
    std::vector<int> sizes_;
    std::vector<int> counts_;
    std::vector<std::uint64_t> min_ids_;
};

// Convenience wrapper: one full chain on the given data.
inline ChainTrace run_chain(const CategoricalDataset& data, const ModelConfig& cfg, long iters,
                            long burnin, long thin, std::uint64_t seed, int chain_index = 0) {
    GibbsSampler sampler(data, cfg);
    return sampler.run(iters, burnin, thin, seed, chain_index);
}

}  // namespace hammix
