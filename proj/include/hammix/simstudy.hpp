// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gibbs.hpp"
#include "kmodes.hpp"
#include "mixture.hpp"
#include "summary.hpp"

namespace hammix {

// Four synthetic designs with common within-cluster scale.
struct Scenario {
    int id;
    int p;
    int k;
    int cluster_size;
    double sigma;

    int n() const { return k * cluster_size; }
    // modality counts cycle through {3,4,5} across variables
    std::vector<int> modality_counts() const {
        std::vector<int> m(p);
        for (int j = 0; j < p; ++j) m[j] = 3 + j % 3;
        return m;
    }
};

inline Scenario scenario_table(int id) {
    switch (id) {
        case 1: return {1, 15, 3, 150, 0.2};
        case 2: return {2, 15, 3, 25, 0.5};
        case 3: return {3, 10, 4, 75, 0.5};
        case 4: return {4, 10, 4, 45, 0.7};
        default: throw std::invalid_argument("scenario id must be 1..4");
    }
}

struct ScenarioDraw {
    CategoricalDataset data;
    Partition truth;
    std::vector<std::vector<int>> centers;
};

// Cluster centers are drawn uniformly and rejected until all pairwise
// Hamming distances reach ceil(p/2); rows are then drawn from Hamming
// kernels with the scenario's common scale.
inline ScenarioDraw generate_scenario(int id, RngStream& rng) {
    const Scenario sc = scenario_table(id);
    const auto m = sc.modality_counts();
    const int min_sep = (sc.p + 1) / 2;
    ScenarioDraw out;
    out.centers.assign(sc.k, std::vector<int>(sc.p));
    for (int tries = 0; tries < 100000; ++tries) {
        for (int k = 0; k < sc.k; ++k)
            for (int j = 0; j < sc.p; ++j)
                out.centers[k][j] = static_cast<int>(rng.uniform_below(m[j]));
        bool ok = true;
        for (int a = 0; a < sc.k && ok; ++a)
            for (int b = a + 1; b < sc.k; ++b)
                if (hamming_distance(out.centers[a], out.centers[b]) < min_sep) {
                    ok = false;
                    break;
                }
        if (ok) break;
        if (tries == 99999) throw std::runtime_error("generate_scenario: center rejection failed");
    }
    out.data.n = sc.n();
    out.data.p = sc.p;
    out.data.alphabets.resize(sc.p);
    out.data.variable_names.resize(sc.p);
    for (int j = 0; j < sc.p; ++j) {
        out.data.variable_names[j] = "V" + std::to_string(j + 1);
        for (int h = 0; h < m[j]; ++h) out.data.alphabets[j].labels.push_back(std::to_string(h));
    }
    std::vector<int> labels;
    labels.reserve(sc.n());
    for (int k = 0; k < sc.k; ++k) {
        HammingParams params{out.centers[k], std::vector<double>(sc.p, sc.sigma)};
        for (int r = 0; r < sc.cluster_size; ++r) {
            const auto x = hamming_sample(params, m, rng);
            out.data.codes.insert(out.data.codes.end(), x.begin(), x.end());
            labels.push_back(k);
        }
    }
    out.truth = Partition::from_labels(labels);
    return out;
}

struct StudyOverrides {
    long iters = 10000;
    long burnin = 5000;
    long thin = 5;
    int kmodes_restarts = 10;
    int kmodes_max_iter = 100;
    double lambda = 0;  // 0: use the scenario's true K
    double gamma = 0;   // 0: elicit so the prior mean of K hits the true K
};

struct StudyRow {
    int replicate;
    std::string method;
    int k_est;
    double ari;
    double seconds;
};

struct StudyReport {
    int scenario_id = 0;
    int replicates = 0;
    std::uint64_t seed = 0;
    double gamma = 0, lambda = 0;
    std::vector<StudyRow> rows;

    std::vector<double> aris_of(const std::string& method) const {
        std::vector<double> v;
        for (const auto& r : rows)
            if (r.method == method) v.push_back(r.ari);
        return v;
    }
};

namespace detail {
inline double quantile_sorted(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    if (v.empty()) return 0;
    const double pos = q * (v.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}
}  // namespace detail

// Per replicate: simulate, fit the Hamming mixture, score the VI point
// estimate against the truth, and run K-modes at K-1, K, K+1. Replicates
// run on two threads; the report order is deterministic.
inline StudyReport run_study(int scenario_id, int replicates, const StudyOverrides& ov,
                             std::uint64_t seed) {
    if (replicates < 1) throw std::invalid_argument("run_study: replicates >= 1");
    const Scenario sc = scenario_table(scenario_id);
    StudyReport report;
    report.scenario_id = scenario_id;
    report.replicates = replicates;
    report.seed = seed;
    report.lambda = ov.lambda > 0 ? ov.lambda : sc.k;
    report.gamma = ov.gamma > 0
                       ? ov.gamma
                       : elicit_gamma(sc.n(), report.lambda, sc.k, CenterStatistic::Mean);
    std::vector<std::vector<StudyRow>> rows(replicates);
    const RngStream base(seed);
    const auto one_replicate = [&](int rep) {
        RngStream gen = base.derive(0x51b, rep);
        ScenarioDraw draw = generate_scenario(scenario_id, gen);
        ModelConfig cfg = default_config_for(draw.data.modality_counts(), report.gamma,
                                             report.lambda);
        auto t0 = std::chrono::steady_clock::now();
        GibbsSampler sampler(draw.data, cfg);
        ChainTrace trace = sampler.run(ov.iters, ov.burnin, ov.thin, seed + 1000 * rep + 7);
        Partition est = point_estimate_vi(trace);
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rows[rep].push_back({rep, "hmm", est.k, adjusted_rand_index(est, draw.truth), secs});
        for (int kk : {sc.k - 1, sc.k, sc.k + 1}) {
            RngStream kr = base.derive(0x52c, rep, kk);
            t0 = std::chrono::steady_clock::now();
            KModesResult km = kmodes(draw.data, kk, ov.kmodes_restarts, ov.kmodes_max_iter, kr);
            secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            rows[rep].push_back({rep, "kmodes" + std::to_string(kk), km.partition.k,
                                 adjusted_rand_index(km.partition, draw.truth), secs});
        }
    };
    const unsigned n_threads = std::min<unsigned>(2, std::thread::hardware_concurrency());
    if (n_threads > 1 && replicates > 1) {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        const auto worker = [&] {
            for (int rep; (rep = next.fetch_add(1)) < replicates;) one_replicate(rep);
        };
        for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
        worker();
        for (auto& th : pool) th.join();
    } else {
        for (int rep = 0; rep < replicates; ++rep) one_replicate(rep);
    }
    for (auto& rr : rows)
        for (auto& r : rr) report.rows.push_back(std::move(r));
    return report;
}

// Delimited study report; the header records the design choices that the
// study leaves open (weight/scale hyperparameters and center generation).
inline std::string study_report_text(const StudyReport& rep) {
    std::ostringstream os;
    const Scenario sc = scenario_table(rep.scenario_id);
    os << "# scenario " << rep.scenario_id << ": p=" << sc.p << " K=" << sc.k
       << " n_k=" << sc.cluster_size << " sigma=" << sc.sigma << "\n";
    os << "# replicates=" << rep.replicates << " seed=" << rep.seed << "\n";
    os << "# fit: lambda=" << rep.lambda << " gamma=" << rep.gamma
       << " (lambda = true K; gamma elicited so the prior mean of K is the true K)\n";
    os << "# design: modality counts cycle {3,4,5}; centers separated by >= ceil(p/2)\n";
    os << "replicate,method,K_est,ari,seconds\n";
    for (const auto& r : rep.rows)
        os << r.replicate << ',' << r.method << ',' << r.k_est << ',' << r.ari << ','
           << r.seconds << "\n";
    for (const std::string method : {std::string("hmm"), "kmodes" + std::to_string(sc.k - 1),
                                     "kmodes" + std::to_string(sc.k),
                                     "kmodes" + std::to_string(sc.k + 1)}) {
        const auto v = rep.aris_of(method);
        os << "# " << method << " ari quartiles: " << detail::quantile_sorted(v, 0.25) << ' '
           << detail::quantile_sorted(v, 0.5) << ' ' << detail::quantile_sorted(v, 0.75) << "\n";
    }
    return os.str();
}

}  // namespace hammix
