// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <vector>

#include "dataset.hpp"
#include "gibbs.hpp"

namespace hammix {

// Cluster labels 0..K-1, canonical: label k first appears before label
// k+1 when reading the vector left to right.
struct Partition {
    std::vector<int> labels;
    int k = 0;

    int n() const { return static_cast<int>(labels.size()); }

    static Partition from_labels(const std::vector<int>& raw) {
        Partition p;
        p.labels.resize(raw.size());
        std::unordered_map<int, int> relabel;
        for (size_t i = 0; i < raw.size(); ++i) {
            auto [it, inserted] = relabel.try_emplace(raw[i], p.k);
            if (inserted) ++p.k;
            p.labels[i] = it->second;
        }
        return p;
    }

    std::vector<int> sizes() const {
        std::vector<int> s(k, 0);
        for (int l : labels) ++s[l];
        return s;
    }
};

struct SimilarityMatrix {
    int n = 0;
    std::vector<double> values;  // n*n, symmetric, unit diagonal

    double at(int i, int j) const { return values[static_cast<size_t>(i) * n + j]; }
};

// Fraction of recorded sweeps in which each pair of observations shares a
// component.
inline SimilarityMatrix similarity_matrix(const ChainTrace& trace) {
    if (trace.records.empty()) throw std::invalid_argument("similarity_matrix: empty trace");
    const int n = static_cast<int>(trace.records.front().z.size());
    SimilarityMatrix psm;
    psm.n = n;
    psm.values.assign(static_cast<size_t>(n) * n, 0.0);
    std::vector<long> hits(static_cast<size_t>(n) * n, 0);
    for (const auto& rec : trace.records)
        for (int i = 0; i < n; ++i) {
            const int zi = rec.z[i];
            for (int j = i + 1; j < n; ++j)
                if (zi == rec.z[j]) ++hits[static_cast<size_t>(i) * n + j];
        }
    const double r = static_cast<double>(trace.records.size());
    for (int i = 0; i < n; ++i) {
        psm.values[static_cast<size_t>(i) * n + i] = 1.0;
        for (int j = i + 1; j < n; ++j) {
            const double v = hits[static_cast<size_t>(i) * n + j] / r;
            psm.values[static_cast<size_t>(i) * n + j] = v;
            psm.values[static_cast<size_t>(j) * n + i] = v;
        }
    }
    return psm;
}

namespace detail {

// x ln x lookup for integer counts up to n.
inline std::vector<double> xlogx_table(int n) {
    std::vector<double> t(n + 1, 0.0);
    for (int x = 2; x <= n; ++x) t[x] = x * std::log(static_cast<double>(x));
    return t;
}

inline double pair_count_sum(const Partition& a, const Partition& b,
                             const std::vector<double>& xlogx, std::vector<int>& scratch) {
    scratch.assign(static_cast<size_t>(a.k) * b.k, 0);
    for (size_t i = 0; i < a.labels.size(); ++i)
        ++scratch[static_cast<size_t>(a.labels[i]) * b.k + b.labels[i]];
    double s = 0;
    for (int c : scratch) s += xlogx[c];
    return s;
}

}  // namespace detail

// Variation of information distance with natural-log entropies:
// VI(a,b) = H(a) + H(b) - 2 I(a,b)
//         = [sum_k n_k ln n_k + sum_l m_l ln m_l - 2 sum_kl n_kl ln n_kl]/n.
inline double vi_distance(const Partition& a, const Partition& b) {
    if (a.labels.size() != b.labels.size())
        throw std::invalid_argument("vi_distance: partitions of different n");
    const int n = a.n();
    const auto xlogx = detail::xlogx_table(n);
    double sa = 0, sb = 0;
    for (int c : a.sizes()) sa += xlogx[c];
    for (int c : b.sizes()) sb += xlogx[c];
    std::vector<int> scratch;
    const double sab = detail::pair_count_sum(a, b, xlogx, scratch);
    return std::max(0.0, (sa + sb - 2 * sab) / n);
}

// Partition minimizing the Monte Carlo posterior expectation of the VI
// loss, with candidates restricted to the distinct recorded partitions.
// Ties break toward fewer clusters, then earlier first occurrence.
inline Partition point_estimate_vi(const ChainTrace& trace) {
    if (trace.records.empty()) throw std::invalid_argument("point_estimate_vi: empty trace");
    const int n = static_cast<int>(trace.records.front().z.size());
    struct VecHash {
        size_t operator()(const std::vector<int>& v) const {
            size_t h = 1469598103934665603ull;
            for (int x : v) {
                h ^= static_cast<size_t>(x) + 0x9e3779b9;
                h *= 1099511628211ull;
            }
            return h;
        }
    };
    std::vector<Partition> uniq;
    std::vector<long> weight;
    std::unordered_map<std::vector<int>, int, VecHash> index;
    for (const auto& rec : trace.records) {
        Partition p = Partition::from_labels(rec.z);
        auto [it, inserted] = index.try_emplace(p.labels, static_cast<int>(uniq.size()));
        if (inserted) {
            uniq.push_back(std::move(p));
            weight.push_back(0);
        }
        ++weight[it->second];
    }
    const size_t nu = uniq.size();
    const auto xlogx = detail::xlogx_table(n);
    std::vector<double> self(nu);
    for (size_t i = 0; i < nu; ++i) {
        double s = 0;
        for (int c : uniq[i].sizes()) s += xlogx[c];
        self[i] = s;
    }
    // VI(i,i) = 0, so each unordered pair contributes symmetrically.
    const unsigned n_threads = nu > 64 && std::thread::hardware_concurrency() > 1 ? 2 : 1;
    std::vector<std::vector<double>> partial(n_threads, std::vector<double>(nu, 0.0));
    const auto work = [&](unsigned tid) {
        std::vector<int> scratch;
        auto& acc = partial[tid];
        for (size_t i = tid; i < nu; i += n_threads) {
            for (size_t j = i + 1; j < nu; ++j) {
                const double sij = detail::pair_count_sum(uniq[i], uniq[j], xlogx, scratch);
                const double vi = std::max(0.0, (self[i] + self[j] - 2 * sij) / n);
                acc[i] += weight[j] * vi;
                acc[j] += weight[i] * vi;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(work, t);
    work(0);
    for (auto& th : pool) th.join();
    std::vector<double>& score = partial[0];
    for (unsigned t = 1; t < n_threads; ++t)
        for (size_t i = 0; i < nu; ++i) score[i] += partial[t][i];
    size_t best = 0;
    for (size_t i = 1; i < nu; ++i) {
        if (score[i] < score[best] ||
            (score[i] == score[best] && uniq[i].k < uniq[best].k))
            best = i;
    }
    return uniq[best];
}

// Permutation-model adjusted Rand index; 1 iff the partitions coincide.
inline double adjusted_rand_index(const Partition& a, const Partition& b) {
    if (a.labels.size() != b.labels.size())
        throw std::invalid_argument("adjusted_rand_index: partitions of different n");
    const long n = a.n();
    std::vector<long> cont(static_cast<size_t>(a.k) * b.k, 0);
    for (size_t i = 0; i < a.labels.size(); ++i)
        ++cont[static_cast<size_t>(a.labels[i]) * b.k + b.labels[i]];
    const auto choose2 = [](long x) { return 0.5 * x * (x - 1); };
    double idx = 0, ra = 0, rb = 0;
    for (long c : cont) idx += choose2(c);
    for (int c : a.sizes()) ra += choose2(c);
    for (int c : b.sizes()) rb += choose2(c);
    const double expected = ra * rb / choose2(n);
    const double maximum = 0.5 * (ra + rb);
    if (maximum == expected) return idx == expected ? 1.0 : 0.0;
    return (idx - expected) / (maximum - expected);
}

struct SilhouetteResult {
    std::vector<double> widths;         // per observation
    std::vector<double> cluster_means;  // per cluster
    double mean_over_clusters = 0;      // average of cluster means
    double mean_over_points = 0;        // pooled average
};

// Classical silhouette widths under Hamming dissimilarity. Singletons get
// width 0 by convention.
inline SilhouetteResult silhouette_hamming(const CategoricalDataset& data,
                                           const Partition& part) {
    if (part.n() != data.n) throw std::invalid_argument("silhouette: partition/data mismatch");
    if (part.k < 2) throw std::invalid_argument("silhouette: needs at least two clusters");
    const auto sizes = part.sizes();
    SilhouetteResult res;
    res.widths.resize(data.n, 0.0);
    res.cluster_means.assign(part.k, 0.0);
    std::vector<double> dist_sum(part.k);
    for (int i = 0; i < data.n; ++i) {
        std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
        for (int j = 0; j < data.n; ++j) {
            if (j == i) continue;
            dist_sum[part.labels[j]] += hamming_distance(data.row(i), data.row(j), data.p);
        }
        const int own = part.labels[i];
        if (sizes[own] <= 1) {
            res.widths[i] = 0.0;  // singleton convention
            continue;
        }
        const double a = dist_sum[own] / (sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int k = 0; k < part.k; ++k)
            if (k != own && sizes[k] > 0) b = std::min(b, dist_sum[k] / sizes[k]);
        const double denom = std::max(a, b);
        res.widths[i] = denom > 0 ? (b - a) / denom : 0.0;
    }
    for (int i = 0; i < data.n; ++i) res.cluster_means[part.labels[i]] += res.widths[i];
    for (int k = 0; k < part.k; ++k) res.cluster_means[k] /= sizes[k];
    for (double w : res.widths) res.mean_over_points += w;
    res.mean_over_points /= data.n;
    for (double cm : res.cluster_means) res.mean_over_clusters += cm;
    res.mean_over_clusters /= part.k;
    return res;
}

struct ClusterParamSummary {
    std::vector<std::vector<int>> center_mode;      // K x p codes
    std::vector<std::vector<double>> sigma_median;  // K x p
    std::vector<int> sizes;
};

// Conditional posterior summaries: with the allocation frozen at the
// point-estimate partition, resample only the allocated parameter block
// and report per-cluster modal centers and scale medians.
inline ClusterParamSummary conditional_param_summary(const CategoricalDataset& data,
                                                     const Partition& part,
                                                     const ModelConfig& cfg, int extra_iters,
                                                     std::uint64_t seed) {
    if (part.n() != data.n) throw std::invalid_argument("param_summary: partition/data mismatch");
    if (extra_iters < 1) throw std::invalid_argument("param_summary: extra_iters >= 1");
    GibbsSampler sampler(data, cfg);
    const auto m = data.modality_counts();
    MixtureState st;
    st.L = st.K = part.k;
    st.z = part.labels;
    st.S.assign(st.L, 1.0);
    st.components.resize(st.L);
    for (int k = 0; k < st.K; ++k) {
        st.components[k].center.assign(data.p, 0);
        st.components[k].scale.assign(data.p, 1.0);
    }
    sampler.rebuild_tables(st);
    // the canonical relabeling preserves first-appearance order here
    for (int k = 0; k < st.K; ++k)
        for (int j = 0; j < data.p; ++j) {
            int best = 0;
            for (int h = 1; h < m[j]; ++h)
                if (sampler.cluster_count(k, j, h) > sampler.cluster_count(k, j, best)) best = h;
            st.components[k].center[j] = best;
        }
    const RngStream base = RngStream(seed).derive(0x5e11, 0);
    std::vector<std::vector<std::vector<double>>> sig(
        st.K, std::vector<std::vector<double>>(data.p));
    std::vector<std::vector<std::vector<int>>> cent_freq(
        st.K, std::vector<std::vector<int>>(data.p));
    for (int k = 0; k < st.K; ++k)
        for (int j = 0; j < data.p; ++j) cent_freq[k][j].assign(m[j], 0);
    for (int t = 1; t <= extra_iters; ++t) {
        sampler.sweep_params_given_partition(st, t, base);
        for (int k = 0; k < st.K; ++k)
            for (int j = 0; j < data.p; ++j) {
                sig[k][j].push_back(st.components[k].scale[j]);
                ++cent_freq[k][j][st.components[k].center[j]];
            }
    }
    ClusterParamSummary out;
    out.sizes = sampler.cluster_sizes();
    out.sizes.resize(st.K);
    out.center_mode.assign(st.K, std::vector<int>(data.p, 0));
    out.sigma_median.assign(st.K, std::vector<double>(data.p, 0.0));
    for (int k = 0; k < st.K; ++k)
        for (int j = 0; j < data.p; ++j) {
            out.center_mode[k][j] = static_cast<int>(
                std::max_element(cent_freq[k][j].begin(), cent_freq[k][j].end()) -
                cent_freq[k][j].begin());
            auto& v = sig[k][j];
            std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
            const double hi = v[v.size() / 2];
            if (v.size() % 2 == 1) {
                out.sigma_median[k][j] = hi;
            } else {
                const double lo = *std::max_element(v.begin(), v.begin() + v.size() / 2);
                out.sigma_median[k][j] = 0.5 * (lo + hi);
            }
        }
    return out;
}

}  // namespace hammix
