// Apache License, Version 2.0, refer to LICENSE.txt
#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>

#include "hammix/io.hpp"
#include "hammix/mixture.hpp"
#include "oracles.hpp"

using namespace hammix;

namespace {
struct TempDir {
    fs::path path;
    TempDir() {
        static std::atomic<int> counter{0};
        const auto tick =
            std::chrono::steady_clock::now().time_since_epoch().count() + counter.fetch_add(1);
        path = fs::temp_directory_path() / ("hammix_test_" + std::to_string(tick));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};
}  // namespace

TEST_CASE("run config json round trip", "[io]") {
    RunConfig cfg;
    cfg.data_path = "zoo.csv";
    cfg.iters = 123;
    cfg.gamma = 0.68;
    cfg.lambda = 7;
    cfg.shared_sigma = true;
    cfg.hig_overrides["legs"] = {3.0, 0.5};
    const json j = run_config_to_json(cfg);
    RunConfig back;
    run_config_apply_json(back, j);
    CHECK(back.data_path == cfg.data_path);
    CHECK(back.iters == cfg.iters);
    CHECK(back.gamma == cfg.gamma);
    CHECK(back.shared_sigma == cfg.shared_sigma);
    REQUIRE(back.hig_overrides.count("legs") == 1);
    CHECK(back.hig_overrides["legs"].first == 3.0);
}

TEST_CASE("model config applies modality defaults and overrides", "[io]") {
    const auto zoo = oracles::load_zoo();
    RunConfig cfg;
    cfg.gamma = 0.68;
    cfg.lambda = 7;
    const ModelConfig mc = build_model_config(cfg, zoo);
    REQUIRE(static_cast<int>(mc.hig_priors.size()) == 16);
    // binary variables pick up (6, 0.25); the six-level legs picks (3, 0.5)
    CHECK(mc.hig_priors[0].v == 6.0);
    CHECK(mc.hig_priors[0].w == 0.25);
    CHECK(mc.hig_priors[12].m == 6);
    CHECK(mc.hig_priors[12].v == 3.0);
    CHECK(mc.hig_priors[12].w == 0.5);

    RunConfig cfg2 = cfg;
    cfg2.hig_overrides["hair"] = {9.0, 0.5};
    cfg2.hig_overrides["13"] = {2.5, 0.75};  // 1-based index of legs
    const ModelConfig mc2 = build_model_config(cfg2, zoo);
    CHECK(mc2.hig_priors[0].v == 9.0);
    CHECK(mc2.hig_priors[12].v == 2.5);

    RunConfig bad = cfg;
    bad.hig_overrides["no_such_var"] = {1.0, 1.0};
    CHECK_THROWS_AS(build_model_config(bad, zoo), std::invalid_argument);
}

TEST_CASE("chain trace persists and allocations read back", "[io]") {
    TempDir tmp;
    ChainTrace trace;
    trace.seed = 5;
    trace.iters = 4;
    trace.burnin = 0;
    trace.thin = 1;
    trace.n = 3;
    trace.p = 2;
    for (int t = 1; t <= 4; ++t) {
        TraceRecord rec;
        rec.iteration = t;
        rec.K = 2;
        rec.L = 3;
        rec.u = 0.5 * t;
        rec.z = {0, 1, t % 2};
        trace.records.push_back(rec);
    }
    write_chain_trace(tmp.path, trace);
    CHECK(fs::exists(tmp.path / "trace_scalar.csv"));
    CHECK(fs::exists(tmp.path / "meta.json"));
    const auto records = read_allocations_csv(tmp.path / "allocations.csv");
    REQUIRE(records.size() == 4);
    CHECK(records[0] == std::vector<int>{0, 1, 1});
    CHECK(records[1] == std::vector<int>{0, 1, 0});

    std::ifstream scalar(tmp.path / "trace_scalar.csv");
    std::string header;
    std::getline(scalar, header);
    CHECK(header == "iteration,K,L,u");
}

TEST_CASE("partition csv round trip", "[io]") {
    TempDir tmp;
    const auto part = Partition::from_labels({0, 1, 1, 2, 0});
    write_partition_csv(tmp.path / "partition.csv", part);
    const auto back = read_partition_csv(tmp.path / "partition.csv");
    CHECK(back.labels == part.labels);
    CHECK(back.k == 3);
}

TEST_CASE("clusters json carries decoded centers and diagnostics", "[io]") {
    const auto zoo = oracles::load_zoo();
    ClusterParamSummary params;
    params.sizes = {60, 41};
    params.center_mode = {std::vector<int>(16, 0), std::vector<int>(16, 1)};
    params.sigma_median = {std::vector<double>(16, 0.3), std::vector<double>(16, 0.6)};
    const auto part_labels = [&] {
        std::vector<int> l(101, 0);
        for (int i = 60; i < 101; ++i) l[i] = 1;
        return l;
    }();
    const auto part = Partition::from_labels(part_labels);
    const auto sil = silhouette_hamming(zoo, part);
    const json j = clusters_json(zoo, part, params, &sil);
    REQUIRE(j.at("K") == 2);
    REQUIRE(j.at("clusters").size() == 2);
    const auto& c0 = j.at("clusters")[0];
    CHECK(c0.at("size") == 60);
    CHECK(c0.contains("gini_normalized"));
    CHECK(c0.contains("shannon_normalized"));
    CHECK(c0.at("center").contains("legs"));
    CHECK(j.contains("silhouette_mean_over_clusters"));
}
