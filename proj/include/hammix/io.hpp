// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "gibbs.hpp"
#include "hamming.hpp"
#include "mixture.hpp"
#include "summary.hpp"

namespace hammix {

namespace fs = std::filesystem;
using nlohmann::json;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Everything a fit needs; a run directory plus this (echoed into
// meta.json) reproduces all artifacts byte for byte.
struct RunConfig {
    std::string data_path;
    std::string out_dir;
    long iters = 25000;
    long burnin = 5000;
    long thin = 1;
    std::uint64_t seed = 1;
    int chains = 1;
    char delimiter = ',';
    bool header = true;
    double gamma = 1.0;
    double lambda = 1.0;
    bool shared_sigma = false;
    double shared_sigma_a = 2.0;
    double shared_sigma_b = 1.0;
    double mh_proposal_sd = 0.1;
    long summary_extra_iters = 1000;
    // per-variable (v,w) overrides keyed by variable name or 1-based index
    std::map<std::string, std::pair<double, double>> hig_overrides;

    void validate() const {
        if (iters <= burnin || burnin < 0 || thin < 1)
            throw std::invalid_argument("config: need iters > burnin >= 0, thin >= 1");
        if (chains < 1) throw std::invalid_argument("config: chains >= 1");
        if (summary_extra_iters < 1)
            throw std::invalid_argument("config: summary_extra_iters >= 1");
    }
};

inline void run_config_apply_json(RunConfig& cfg, const json& j) {
    if (j.contains("data")) cfg.data_path = j.at("data").get<std::string>();
    if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
    if (j.contains("iters")) cfg.iters = j.at("iters").get<long>();
    if (j.contains("burnin")) cfg.burnin = j.at("burnin").get<long>();
    if (j.contains("thin")) cfg.thin = j.at("thin").get<long>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("chains")) cfg.chains = j.at("chains").get<int>();
    if (j.contains("delimiter")) {
        const auto s = j.at("delimiter").get<std::string>();
        if (s.size() != 1) throw std::invalid_argument("config: delimiter must be one character");
        cfg.delimiter = s[0];
    }
    if (j.contains("header")) cfg.header = j.at("header").get<bool>();
    if (j.contains("gamma")) cfg.gamma = j.at("gamma").get<double>();
    if (j.contains("lambda")) cfg.lambda = j.at("lambda").get<double>();
    if (j.contains("shared_sigma")) cfg.shared_sigma = j.at("shared_sigma").get<bool>();
    if (j.contains("shared_sigma_prior")) {
        cfg.shared_sigma_a = j.at("shared_sigma_prior").value("a", cfg.shared_sigma_a);
        cfg.shared_sigma_b = j.at("shared_sigma_prior").value("b", cfg.shared_sigma_b);
    }
    if (j.contains("mh_proposal_sd")) cfg.mh_proposal_sd = j.at("mh_proposal_sd").get<double>();
    if (j.contains("summary_extra_iters"))
        cfg.summary_extra_iters = j.at("summary_extra_iters").get<long>();
    if (j.contains("hig_overrides"))
        for (const auto& [key, val] : j.at("hig_overrides").items())
            cfg.hig_overrides[key] = {val.at("v").get<double>(), val.at("w").get<double>()};
}

inline json run_config_to_json(const RunConfig& cfg) {
    json j;
    j["data"] = cfg.data_path;
    j["out"] = cfg.out_dir;
    j["iters"] = cfg.iters;
    j["burnin"] = cfg.burnin;
    j["thin"] = cfg.thin;
    j["seed"] = cfg.seed;
    j["chains"] = cfg.chains;
    j["delimiter"] = std::string(1, cfg.delimiter);
    j["header"] = cfg.header;
    j["gamma"] = cfg.gamma;
    j["lambda"] = cfg.lambda;
    j["shared_sigma"] = cfg.shared_sigma;
    j["shared_sigma_prior"] = {{"a", cfg.shared_sigma_a}, {"b", cfg.shared_sigma_b}};
    j["mh_proposal_sd"] = cfg.mh_proposal_sd;
    j["summary_extra_iters"] = cfg.summary_extra_iters;
    json ov = json::object();
    for (const auto& [key, vw] : cfg.hig_overrides)
        ov[key] = {{"v", vw.first}, {"w", vw.second}};
    j["hig_overrides"] = ov;
    return j;
}

// Scale priors: modality-keyed defaults, then explicit per-variable
// overrides by name or 1-based index.
inline ModelConfig build_model_config(const RunConfig& cfg, const CategoricalDataset& data) {
    ModelConfig mc = default_config_for(data.modality_counts(), cfg.gamma, cfg.lambda);
    mc.shared_sigma = cfg.shared_sigma;
    mc.shared_sigma_a = cfg.shared_sigma_a;
    mc.shared_sigma_b = cfg.shared_sigma_b;
    mc.mh_proposal_sd = cfg.mh_proposal_sd;
    for (const auto& [key, vw] : cfg.hig_overrides) {
        int hit = -1;
        for (int j = 0; j < data.p; ++j)
            if (data.variable_names[j] == key) hit = j;
        if (hit < 0) {
            try {
                const int idx = std::stoi(key);
                if (idx >= 1 && idx <= data.p) hit = idx - 1;
            } catch (const std::exception&) {
            }
        }
        if (hit < 0) throw std::invalid_argument("hig_overrides: unknown variable '" + key + "'");
        mc.hig_priors[hit].v = vw.first;
        mc.hig_priors[hit].w = vw.second;
    }
    mc.validate();
    return mc;
}

inline CategoricalDataset load_dataset_file(const std::string& path, char delimiter,
                                            bool header) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset: " + path);
    return load_dataset(in, {delimiter, header});
}

namespace detail {
inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}
}  // namespace detail

inline void write_chain_trace(const fs::path& dir, const ChainTrace& trace) {
    fs::create_directories(dir);
    {
        std::ofstream scalar(dir / "trace_scalar.csv");
        scalar << "iteration,K,L,u";
        if (trace.shared_sigma) scalar << ",shared_sigma,accept_rate";
        scalar << "\n";
        for (const auto& rec : trace.records) {
            scalar << rec.iteration << ',' << rec.K << ',' << rec.L << ','
                   << detail::fmt(rec.u);
            if (trace.shared_sigma)
                scalar << ',' << detail::fmt(rec.shared_sigma) << ','
                       << detail::fmt(trace.mh_acceptance_rate());
            scalar << "\n";
        }
    }
    {
        std::ofstream alloc(dir / "allocations.csv");
        for (const auto& rec : trace.records) {
            for (size_t i = 0; i < rec.z.size(); ++i)
                alloc << (i ? "," : "") << rec.z[i] + 1;
            alloc << "\n";
        }
    }
    json meta;
    meta["seed"] = trace.seed;
    meta["chain_index"] = trace.chain_index;
    meta["iters"] = trace.iters;
    meta["burnin"] = trace.burnin;
    meta["thin"] = trace.thin;
    meta["records"] = trace.records.size();
    meta["shared_sigma"] = trace.shared_sigma;
    meta["shared_sigma_layout"] = "per-component";
    meta["mh_acceptance_rate"] = trace.mh_acceptance_rate();
    meta["seconds"] = trace.seconds;
    std::ofstream(dir / "meta.json") << meta.dump(2) << "\n";
}

inline std::vector<std::vector<int>> read_allocations_csv(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    std::vector<std::vector<int>> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<int> z;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) z.push_back(std::stoi(tok) - 1);
        records.push_back(std::move(z));
    }
    if (records.empty()) throw IoError("no allocation records in " + file.string());
    return records;
}

inline void write_psm_csv(const fs::path& file, const SimilarityMatrix& psm) {
    std::ofstream out(file);
    for (int i = 0; i < psm.n; ++i) {
        for (int j = 0; j < psm.n; ++j) out << (j ? "," : "") << detail::fmt(psm.at(i, j));
        out << "\n";
    }
}

inline void write_partition_csv(const fs::path& file, const Partition& part) {
    std::ofstream out(file);
    out << "index,label\n";
    for (int i = 0; i < part.n(); ++i) out << i + 1 << ',' << part.labels[i] + 1 << "\n";
}

inline Partition read_partition_csv(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    std::string line;
    std::getline(in, line);  // header
    std::vector<int> labels;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        labels.push_back(std::stoi(line.substr(comma + 1)) - 1);
    }
    return Partition::from_labels(labels);
}

// Per-cluster summary: decoded centers, scale medians, sizes, silhouette
// and heterogeneity diagnostics.
inline json clusters_json(const CategoricalDataset& data, const Partition& part,
                          const ClusterParamSummary& params, const SilhouetteResult* sil) {
    const auto m = data.modality_counts();
    json root;
    root["K"] = part.k;
    root["n"] = data.n;
    if (sil) {
        root["silhouette_mean_over_clusters"] = sil->mean_over_clusters;
        root["silhouette_mean_over_points"] = sil->mean_over_points;
    }
    json clusters = json::array();
    for (int k = 0; k < part.k; ++k) {
        json c;
        c["cluster"] = k + 1;
        c["size"] = params.sizes[k];
        json center = json::object();
        for (int j = 0; j < data.p; ++j)
            center[data.variable_names[j]] = data.alphabets[j].labels[params.center_mode[k][j]];
        c["center"] = center;
        c["sigma_median"] = params.sigma_median[k];
        c["gini_normalized"] = gini_normalized(params.sigma_median[k], m);
        c["shannon_normalized"] = shannon_normalized(params.sigma_median[k], m);
        if (sil) c["silhouette_mean"] = sil->cluster_means[k];
        clusters.push_back(std::move(c));
    }
    root["clusters"] = clusters;
    return root;
}

}  // namespace hammix
