// Apache License, Version 2.0, refer to LICENSE.txt
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "hammix/gibbs.hpp"
#include "hammix/quadrature.hpp"
#include "hammix/special.hpp"
#include "hammix/summary.hpp"
#include "oracles.hpp"

using namespace hammix;
using Catch::Approx;

namespace {

// dataset built directly from codes with full alphabets
CategoricalDataset make_data(const std::vector<std::vector<int>>& rows,
                             const std::vector<int>& m) {
    CategoricalDataset ds;
    ds.n = static_cast<int>(rows.size());
    ds.p = static_cast<int>(m.size());
    ds.alphabets.resize(ds.p);
    ds.variable_names.resize(ds.p);
    for (int j = 0; j < ds.p; ++j) {
        ds.variable_names[j] = "V" + std::to_string(j + 1);
        for (int h = 0; h < m[j]; ++h) ds.alphabets[j].labels.push_back(std::to_string(h));
    }
    for (const auto& r : rows) ds.codes.insert(ds.codes.end(), r.begin(), r.end());
    return ds;
}

ModelConfig small_config(const std::vector<int>& m, double gamma = 1.0, double lambda = 2.0) {
    return default_config_for(m, gamma, lambda);
}

MixtureState two_component_state(const CategoricalDataset& ds, double sigma) {
    MixtureState st;
    st.L = 2;
    st.z.assign(ds.n, 0);
    for (int i = ds.n / 2; i < ds.n; ++i) st.z[i] = 1;
    st.S = {1.0, 1.0};
    st.components.resize(2);
    st.components[0].center.assign(ds.row(0), ds.row(0) + ds.p);
    st.components[1].center.assign(ds.row(ds.n - 1), ds.row(ds.n - 1) + ds.p);
    st.components[0].scale.assign(ds.p, sigma);
    st.components[1].scale.assign(ds.p, sigma);
    st.u = 1.0;
    return st;
}

}  // namespace

TEST_CASE("step_u draws Gamma(n, T)", "[gibbs]") {
    const auto ds = make_data({{0, 0}, {1, 1}, {0, 1}, {1, 0}}, {2, 2});
    GibbsSampler sampler(ds, small_config({2, 2}));
    MixtureState st = two_component_state(ds, 0.5);
    st.S = {1.0, 2.0};
    sampler.rebuild_tables(st);
    const RngStream base(99);
    double sum = 0;
    const int reps = 40000;
    for (int t = 0; t < reps; ++t) {
        sampler.step_u(st, SweepRng(base, t).scalar(keys::kU));
        REQUIRE(st.u > 0);
        sum += st.u;
    }
    CHECK(sum / reps == Approx(4.0 / 3.0).epsilon(0.02));
    // identical stream key, identical draw
    sampler.step_u(st, SweepRng(base, 7).scalar(keys::kU));
    const double first = st.u;
    sampler.step_u(st, SweepRng(base, 7).scalar(keys::kU));
    CHECK(st.u == first);
}

TEST_CASE("allocations: single component and separated components", "[gibbs]") {
    SECTION("L=1 sends everything to the only slot") {
        const auto ds = make_data({{0}, {1}, {2}}, {3});
        GibbsSampler sampler(ds, small_config({3}));
        MixtureState st;
        st.L = 1;
        st.z = {0, 0, 0};
        st.S = {1.0};
        st.components.resize(1);
        st.components[0].center = {0};
        st.components[0].scale = {1.0};
        st.u = 1.0;
        sampler.rebuild_tables(st);
        sampler.step_allocations(st, SweepRng(RngStream(1), 1));
        CHECK(st.K == 1);
        CHECK(st.z == std::vector<int>{0, 0, 0});
    }
    SECTION("near-deterministic kernels separate the data") {
        std::vector<std::vector<int>> rows;
        for (int i = 0; i < 4; ++i) rows.push_back({0, 0, 0});
        for (int i = 0; i < 4; ++i) rows.push_back({1, 1, 1});
        const auto ds = make_data(rows, {2, 2, 2});
        GibbsSampler sampler(ds, small_config({2, 2, 2}));
        MixtureState st = two_component_state(ds, 1e-6);
        sampler.rebuild_tables(st);
        for (int t = 1; t <= 20; ++t) {
            sampler.step_allocations(st, SweepRng(RngStream(5), t));
            REQUIRE(st.K == 2);
            for (int i = 0; i < 4; ++i) CHECK(st.z[i] == st.z[0]);
            for (int i = 4; i < 8; ++i) CHECK(st.z[i] == st.z[4]);
            CHECK(st.z[0] != st.z[4]);
        }
        // relabel contract: allocated labels are 0..K-1 and non-empty
        std::vector<int> sz(st.K, 0);
        for (int zi : st.z) {
            REQUIRE(zi < st.K);
            ++sz[zi];
        }
        for (int s : sz) CHECK(s > 0);
    }
}

TEST_CASE("step 3 matches the analytic two-atom mixture", "[gibbs]") {
    const auto ds = make_data({{0}, {0}, {1}, {1}, {0}, {1}}, {2});
    auto cfg = small_config({2}, 1.0, 2.0);
    GibbsSampler sampler(ds, cfg);
    MixtureState st = two_component_state(ds, 0.5);
    // force K = 3 via three clusters
    st.L = 3;
    st.z = {0, 0, 1, 1, 2, 2};
    st.S = {1.0, 1.0, 1.0};
    st.components.resize(3);
    for (auto& c : st.components) {
        c.center = {0};
        c.scale = {0.5};
    }
    sampler.rebuild_tables(st);
    REQUIRE(st.K == 3);

    const double u = 0.5, gamma = cfg.gamma, lambda = cfg.lambda;
    const double up1g = std::pow(u + 1.0, gamma);
    const double lam = lambda / up1g;
    const double w0 = up1g * 3 / (up1g * 3 + lambda);
    const int reps = 100000;
    std::vector<int> freq(64, 0);
    const RngStream base(123);
    for (int t = 0; t < reps; ++t) {
        st.u = u;
        st.L = 3;  // L is overwritten by the step; K stays 3
        sampler.step_num_nonallocated(st, SweepRng(base, t).scalar(keys::kNumNa));
        REQUIRE(st.L >= st.K);
        ++freq[std::min(63, st.L - st.K)];
    }
    for (int l = 0; l <= 10; ++l) {
        const double p = w0 * std::exp(shifted_poisson_log_pmf(l, 0, lam)) +
                         (1 - w0) * std::exp(shifted_poisson_log_pmf(l, 1, lam));
        const double se = std::sqrt(p * (1 - p) / reps);
        INFO("l=" << l);
        CHECK(static_cast<double>(freq[l]) / reps == Approx(p).margin(3 * se + 1e-9));
    }

    SECTION("vanishing lambda pins the non-allocated count at zero") {
        auto cfg0 = small_config({2}, 1.0, 1e-12);
        GibbsSampler s0(ds, cfg0);
        MixtureState st0 = two_component_state(ds, 0.5);
        s0.rebuild_tables(st0);
        for (int t = 0; t < 200; ++t) {
            s0.step_num_nonallocated(st0, SweepRng(base, t).scalar(keys::kNumNa));
            CHECK(st0.L == st0.K);
        }
    }
}

TEST_CASE("step 4 weight moments", "[gibbs]") {
    const auto ds = make_data({{0}, {0}, {0}, {1}}, {2});
    auto cfg = small_config({2}, 0.7, 2.0);
    GibbsSampler sampler(ds, cfg);
    MixtureState st;
    st.L = 3;
    st.z = {0, 0, 0, 1};  // sizes 3 and 1, one empty slot
    st.S = {1, 1, 1};
    st.components.resize(3);
    for (auto& c : st.components) {
        c.center = {0};
        c.scale = {1.0};
    }
    st.u = 0.8;
    sampler.rebuild_tables(st);
    REQUIRE(st.K == 2);
    const RngStream base(7);
    double s0 = 0, s1 = 0, s2 = 0;
    const int reps = 60000;
    for (int t = 0; t < reps; ++t) {
        sampler.step_weights(st, SweepRng(base, t));
        for (double s : st.S) REQUIRE(s > 0);
        s0 += st.S[0];
        s1 += st.S[1];
        s2 += st.S[2];
    }
    CHECK(s0 / reps == Approx((0.7 + 3) / 1.8).epsilon(0.03));
    CHECK(s1 / reps == Approx((0.7 + 1) / 1.8).epsilon(0.03));
    CHECK(s2 / reps == Approx(0.7 / 1.8).epsilon(0.03));
}

TEST_CASE("step 5a: center concentration and scale posterior", "[gibbs]") {
    std::vector<std::vector<int>> rows(8, {2, 0});
    const auto ds = make_data(rows, {3, 2});
    auto cfg = small_config({3, 2});
    GibbsSampler sampler(ds, cfg);
    MixtureState st;
    st.L = 1;
    st.z.assign(8, 0);
    st.S = {1.0};
    st.components.resize(1);
    st.components[0].center = {0, 0};
    st.components[0].scale = {0.05, 0.05};
    st.u = 1.0;
    sampler.rebuild_tables(st);
    const RngStream base(21);

    SECTION("pure cluster with small scale pins the center") {
        for (int t = 0; t < 300; ++t) {
            st.components[0].scale = {0.05, 0.05};
            sampler.step_params_allocated(st, SweepRng(base, t));
            CHECK(st.components[0].center == std::vector<int>{2, 0});
        }
    }

    SECTION("huge scale flattens the center full conditional") {
        std::vector<int> freq(3, 0);
        const int reps = 30000;
        for (int t = 0; t < reps; ++t) {
            st.components[0].center = {0, 0};
            st.components[0].scale = {1e7, 1e7};
            sampler.step_params_allocated(st, SweepRng(base, t));
            ++freq[st.components[0].center[0]];
        }
        for (int h = 0; h < 3; ++h) {
            const double se = std::sqrt((1.0 / 3) * (2.0 / 3) / reps);
            CHECK(static_cast<double>(freq[h]) / reps == Approx(1.0 / 3).margin(3 * se));
        }
    }

    SECTION("scale draws follow the conjugate posterior") {
        // pure cluster: the drawn center is a.s. the shared value, so
        // (v*, w*) = (v + 8, w) for variable 0
        const HigParams post = hig_posterior(cfg.hig_priors[0], 8, 8);
        std::vector<double> omegas;
        for (int t = 0; t < 4000; ++t) {
            st.components[0].scale = {0.05, 0.05};
            sampler.step_params_allocated(st, SweepRng(base, t));
            omegas.push_back(std::exp(-1.0 / st.components[0].scale[0]));
        }
        const double d =
            oracles::ks_statistic(omegas, [&](double o) { return omega_cdf(o, post); });
        CHECK(d < 1.6276 / std::sqrt(4000.0));
    }
}

TEST_CASE("step 5na: fresh slots from the prior, allocated untouched", "[gibbs]") {
    const auto ds = make_data({{0, 1}, {1, 0}, {2, 1}, {0, 0}}, {3, 2});
    auto cfg = small_config({3, 2});
    GibbsSampler sampler(ds, cfg);
    MixtureState st;
    st.L = 2;
    st.z = {0, 0, 0, 0};
    st.S = {1.0, 0.5};
    st.components.resize(2);
    st.components[0].center = {1, 1};
    st.components[0].scale = {0.3, 0.4};
    st.components[1].center = {0, 0};
    st.components[1].scale = {1.0, 1.0};
    st.u = 1.0;
    sampler.rebuild_tables(st);
    REQUIRE(st.K == 1);
    const RngStream base(33);
    std::vector<int> freq(3, 0);
    std::vector<double> omegas;
    const int reps = 20000;
    for (int t = 0; t < reps; ++t) {
        sampler.step_params_nonallocated(st, SweepRng(base, t));
        CHECK(st.components[0].center == std::vector<int>{1, 1});
        CHECK(st.components[0].scale[0] == 0.3);
        ++freq[st.components[1].center[0]];
        if (t < 4000) omegas.push_back(std::exp(-1.0 / st.components[1].scale[0]));
    }
    for (int h = 0; h < 3; ++h) {
        const double se = std::sqrt((1.0 / 3) * (2.0 / 3) / reps);
        CHECK(static_cast<double>(freq[h]) / reps == Approx(1.0 / 3).margin(3 * se));
    }
    const double d = oracles::ks_statistic(
        omegas, [&](double o) { return omega_cdf(o, cfg.hig_priors[0]); });
    CHECK(d < 1.6276 / std::sqrt(4000.0));
}

TEST_CASE("shared scale: Metropolis reproduces the prior on empty components", "[gibbs]") {
    const auto ds = make_data({{0, 1}, {1, 0}}, {2, 3});  // unequal m: MH branch
    auto cfg = small_config({2, 3});
    cfg.shared_sigma = true;
    cfg.mh_proposal_sd = 1.0;  // wide moves so the walk decorrelates quickly
    GibbsSampler sampler(ds, cfg);
    REQUIRE_FALSE(sampler.shared_sigma_conjugate());
    MixtureState st;
    st.L = 2;
    st.z = {0, 0};
    st.S = {1.0, 1.0};
    st.components.resize(2);
    for (auto& c : st.components) {
        c.center = {0, 0};
        c.scale = {1.0, 1.0};
    }
    st.u = 1.0;
    sampler.rebuild_tables(st);

    RngStream walk(2024);
    ChainTrace tally;
    double cur = 1.0;
    std::vector<double> kept;
    for (int t = 0; t < 200000; ++t) {
        cur = sampler.mh_shared_sigma(st, 1, cur, walk, &tally);
        if (t % 20 == 19) kept.push_back(cur);
    }
    CHECK(tally.mh_proposed == 200000);
    CHECK(tally.mh_accepted > 0);
    // inverse-gamma(2,1) CDF by quadrature
    const auto ig_cdf = [&](double x) {
        return integrate_adaptive(
                   [&](double s) { return std::pow(s, -3.0) * std::exp(-1.0 / s); }, 1e-9, x,
                   1e-10, 1e-14)
            .value;  // normalizing constant Gamma(2) = 1
    };
    const double d = oracles::ks_statistic(kept, ig_cdf);
    // thinned random-walk draws retain a little correlation
    CHECK(d < 2.0 * 1.6276 / std::sqrt(static_cast<double>(kept.size())));

    // vanishing proposal step: the move is always accepted
    auto cfg_still = cfg;
    cfg_still.mh_proposal_sd = 1e-12;
    GibbsSampler still(ds, cfg_still);
    still.rebuild_tables(st);
    ChainTrace still_tally;
    double c2 = 0.7;
    for (int t = 0; t < 1000; ++t) c2 = still.mh_shared_sigma(st, 1, c2, walk, &still_tally);
    CHECK(still_tally.mh_accepted == 1000);
}

TEST_CASE("shared scale: equal-m conjugate branch matches the analytic posterior", "[gibbs]") {
    std::vector<std::vector<int>> rows{{0, 0}, {0, 0}, {0, 1}, {1, 0}, {0, 0}};
    const auto ds = make_data(rows, {3, 3});
    auto cfg = small_config({3, 3});
    cfg.shared_sigma = true;
    GibbsSampler sampler(ds, cfg);
    REQUIRE(sampler.shared_sigma_conjugate());
    MixtureState st;
    st.L = 1;
    st.z.assign(5, 0);
    st.S = {1.0};
    st.components.resize(1);
    st.components[0].center = {0, 0};
    st.components[0].scale = {0.5, 0.5};
    st.u = 1.0;
    sampler.rebuild_tables(st);

    // keep the center frozen at (0,0): only the scale step runs
    const HigParams prior = cfg.hig_priors[0];
    const int total_dh = 2;  // two mismatching cells against center (0,0)
    const HigParams post{prior.v + 5 * 2 - total_dh, prior.w + total_dh, 3};
    const RngStream base(3141);
    std::vector<double> omegas;
    for (int t = 0; t < 4000; ++t) {
        st.components[0].center = {0, 0};
        sampler.step_shared_sigma(st, SweepRng(base, t), nullptr);
        CHECK(st.components[0].scale[0] == st.components[0].scale[1]);
        omegas.push_back(std::exp(-1.0 / st.components[0].scale[0]));
    }
    const double d = oracles::ks_statistic(omegas, [&](double o) { return omega_cdf(o, post); });
    CHECK(d < 1.6276 / std::sqrt(4000.0));

    // grid identity: HIG(v*,w*) log-density minus [prior + likelihood] is constant
    double ref = kNegInf;
    for (double s = 0.1; s < 3.0; s += 0.1) {
        const double lik =
            -total_dh / s - 5 * 2 * std::log1p(2 * std::exp(-1.0 / s));
        const double lhs = hig_log_density_sigma(s, post);
        const double rhs = hig_log_density_sigma(s, prior) + lik;
        if (ref == kNegInf) ref = lhs - rhs;
        CHECK(lhs - rhs == Approx(ref).margin(1e-8));
    }
}

TEST_CASE("degenerate identical data concentrates on one cluster", "[gibbs]") {
    std::vector<std::vector<int>> rows(50, {0, 1, 2});
    const auto ds = make_data(rows, {3, 3, 3});
    auto cfg = small_config({3, 3, 3}, 1.0, 2.0);
    GibbsSampler sampler(ds, cfg);
    const ChainTrace trace = sampler.run(2000, 500, 1, 4);
    std::vector<int> freq(10, 0);
    for (const auto& rec : trace.records) ++freq[std::min(9, rec.K)];
    CHECK(std::max_element(freq.begin(), freq.end()) - freq.begin() == 1);
}

TEST_CASE("identical seeds give bit-identical traces", "[gibbs]") {
    RngStream gen(777);
    ModelConfig gen_cfg = small_config({3, 3, 2}, 0.8, 2.5);
    const auto draw = sample_generative(20, 3, {3, 3, 2}, gen_cfg, gen);
    GibbsSampler a(draw.data, gen_cfg), b(draw.data, gen_cfg);
    const ChainTrace ta = a.run(200, 50, 2, 99), tb = b.run(200, 50, 2, 99);
    REQUIRE(ta.records.size() == tb.records.size());
    for (size_t r = 0; r < ta.records.size(); ++r) {
        CHECK(ta.records[r].z == tb.records[r].z);
        CHECK(ta.records[r].u == tb.records[r].u);
        CHECK(ta.records[r].K == tb.records[r].K);
        for (int k = 0; k < ta.records[r].K; ++k)
            CHECK(ta.records[r].components[k].scale == tb.records[r].components[k].scale);
    }
}

TEST_CASE("row permutation permutes the similarity matrix", "[gibbs]") {
    // distinct rows so the min-datum-id cluster keys are unambiguous
    RngStream gen(11);
    const std::vector<int> m{3, 3, 3, 2};
    std::vector<std::vector<int>> rows;
    while (rows.size() < 12) {
        std::vector<int> r(4);
        for (int j = 0; j < 4; ++j) r[j] = static_cast<int>(gen.uniform_below(m[j]));
        if (std::find(rows.begin(), rows.end(), r) == rows.end()) rows.push_back(r);
    }
    const auto ds = make_data(rows, m);
    auto cfg = small_config(m, 0.9, 2.0);

    GibbsSampler plain(ds, cfg);
    const ChainTrace t0 = plain.run(400, 100, 1, 31);

    // permute the rows, keeping each datum's identity attached
    std::vector<int> perm(12);
    std::iota(perm.begin(), perm.end(), 0);
    RngStream shuffler(5);
    for (int i = 0; i < 12; ++i) std::swap(perm[i], perm[i + shuffler.uniform_below(12 - i)]);
    std::vector<std::vector<int>> prows(12);
    std::vector<std::uint64_t> ids(12);
    for (int pos = 0; pos < 12; ++pos) {
        prows[pos] = rows[perm[pos]];
        ids[pos] = static_cast<std::uint64_t>(perm[pos]);
    }
    const auto pds = make_data(prows, m);
    GibbsSampler permuted(pds, cfg, ids);
    const ChainTrace t1 = permuted.run(400, 100, 1, 31);

    const auto psm0 = similarity_matrix(t0);
    const auto psm1 = similarity_matrix(t1);
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j) CHECK(psm1.at(i, j) == psm0.at(perm[i], perm[j]));
}

TEST_CASE("state invariants hold along a chain", "[gibbs]") {
    RngStream gen(13);
    ModelConfig gen_cfg = small_config({2, 3}, 1.0, 3.0);
    const auto draw = sample_generative(15, 2, {2, 3}, gen_cfg, gen);
    GibbsSampler sampler(draw.data, gen_cfg);
    MixtureState st = sampler.init_state(RngStream(42));
    sampler.rebuild_tables(st);
    const RngStream base(17);
    for (long t = 1; t <= 50; ++t) {
        sampler.sweep(st, t, base);
        REQUIRE(st.K >= 1);
        REQUIRE(st.K <= st.L);
        std::vector<int> sz(st.L, 0);
        for (int zi : st.z) {
            REQUIRE(zi >= 0);
            REQUIRE(zi < st.K);
            ++sz[zi];
        }
        for (int k = 0; k < st.K; ++k) REQUIRE(sz[k] > 0);
        for (int l = st.K; l < st.L; ++l) REQUIRE(sz[l] == 0);
        REQUIRE(st.total_weight() > 0);
        for (const auto& c : st.components)
            for (double s : c.scale) REQUIRE(s > 0);
    }
}
