// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <algorithm>
#include <cassert>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dataset.hpp"
#include "rng.hpp"
#include "summary.hpp"

namespace hammix {

struct KModesResult {
    Partition partition;
    std::vector<std::vector<int>> modes;
    long cost = 0;  // total Hamming distance of points to their modes
    int iterations = 0;
    int restart_index = 0;
};

namespace detail {

struct KModesRun {
    std::vector<int> assign;
    std::vector<std::vector<int>> modes;
    long cost = 0;
    int iterations = 0;
};

inline long kmodes_cost(const CategoricalDataset& data, const std::vector<int>& assign,
                        const std::vector<std::vector<int>>& modes) {
    long c = 0;
    for (int i = 0; i < data.n; ++i)
        c += hamming_distance(data.row(i), modes[assign[i]].data(), data.p);
    return c;
}

inline KModesRun kmodes_single(const CategoricalDataset& data, int K, int max_iter,
                               RngStream rng) {
    const int n = data.n, p = data.p;
    const auto m = data.modality_counts();
    // initial modes: K random rows, re-drawn a few times if duplicated
    std::vector<int> idx(n);
    std::vector<std::vector<int>> modes(K);
    for (int attempt = 0; attempt < 64; ++attempt) {
        std::iota(idx.begin(), idx.end(), 0);
        for (int k = 0; k < K; ++k) {
            std::swap(idx[k], idx[k + rng.uniform_below(n - k)]);
            modes[k].assign(data.row(idx[k]), data.row(idx[k]) + p);
        }
        bool distinct = true;
        for (int a = 0; a < K && distinct; ++a)
            for (int b = a + 1; b < K; ++b)
                if (modes[a] == modes[b]) {
                    distinct = false;
                    break;
                }
        if (distinct) break;
    }
    KModesRun run;
    run.assign.assign(n, -1);
    std::vector<int> sizes(K, 0);
    long prev_cost = std::numeric_limits<long>::max();
    for (int it = 0; it < max_iter; ++it) {
        // assignment, ties to the lowest cluster index
        bool changed = false;
        std::fill(sizes.begin(), sizes.end(), 0);
        for (int i = 0; i < n; ++i) {
            int best = 0, best_d = hamming_distance(data.row(i), modes[0].data(), p);
            for (int k = 1; k < K; ++k) {
                const int d = hamming_distance(data.row(i), modes[k].data(), p);
                if (d < best_d) {
                    best = k;
                    best_d = d;
                }
            }
            changed |= best != run.assign[i];
            run.assign[i] = best;
            ++sizes[best];
        }
        // reseed empty clusters with the point farthest from its mode
        for (int k = 0; k < K; ++k) {
            if (sizes[k] > 0) continue;
            int far = -1, far_d = -1;
            for (int i = 0; i < n; ++i) {
                if (sizes[run.assign[i]] <= 1) continue;
                const int d = hamming_distance(data.row(i), modes[run.assign[i]].data(), p);
                if (d > far_d) {
                    far = i;
                    far_d = d;
                }
            }
            if (far < 0) break;
            --sizes[run.assign[far]];
            run.assign[far] = k;
            sizes[k] = 1;
            modes[k].assign(data.row(far), data.row(far) + p);
            changed = true;
        }
        // mode update: per-variable majority, ties to the lowest code
        for (int k = 0; k < K; ++k) {
            if (sizes[k] == 0) continue;
            for (int j = 0; j < p; ++j) {
                std::vector<int> freq(m[j], 0);
                for (int i = 0; i < n; ++i)
                    if (run.assign[i] == k) ++freq[data.code(i, j)];
                modes[k][j] = static_cast<int>(
                    std::max_element(freq.begin(), freq.end()) - freq.begin());
            }
        }
        run.iterations = it + 1;
        run.cost = kmodes_cost(data, run.assign, modes);
        assert(run.cost <= prev_cost);
        prev_cost = run.cost;
        if (!changed) break;
    }
    run.modes = std::move(modes);
    return run;
}

}  // namespace detail

// Batch K-modes with multiple restarts: best cost wins, ties to the
// earliest restart.
inline KModesResult kmodes(const CategoricalDataset& data, int K, int restarts, int max_iter,
                           RngStream& rng) {
    if (K < 1 || K > data.n) throw std::invalid_argument("kmodes: need 1 <= K <= n");
    if (restarts < 1 || max_iter < 1)
        throw std::invalid_argument("kmodes: restarts and max_iter must be >= 1");
    KModesResult best;
    best.cost = std::numeric_limits<long>::max();
    for (int r = 0; r < restarts; ++r) {
        detail::KModesRun run = detail::kmodes_single(data, K, max_iter, rng.derive(0x6d, r));
        if (run.cost < best.cost) {
            best.partition = Partition::from_labels(run.assign);
            best.modes = run.modes;
            best.cost = run.cost;
            best.iterations = run.iterations;
            best.restart_index = r;
        }
    }
    return best;
}

}  // namespace hammix
