// Apache License, Version 2.0, refer to LICENSE.txt
//
// hammix: model-based clustering of unordered categorical data with
// mixtures of Hamming distributions and a random number of components.

#include <atomic>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "hammix/gibbs.hpp"
#include "hammix/hig.hpp"
#include "hammix/io.hpp"
#include "hammix/kmodes.hpp"
#include "hammix/mixture.hpp"
#include "hammix/simstudy.hpp"
#include "hammix/summary.hpp"

namespace hx = hammix;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

hx::Partition read_truth_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open truth file: " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::string> raw;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.rfind(',');
        raw.push_back(comma == std::string::npos ? line : line.substr(comma + 1));
    }
    if (raw.empty()) throw UsageError("truth file has no rows: " + path);
    std::vector<int> codes;
    std::vector<std::string> seen;
    for (const auto& s : raw) {
        auto it = std::find(seen.begin(), seen.end(), s);
        if (it == seen.end()) {
            seen.push_back(s);
            it = std::prev(seen.end());
        }
        codes.push_back(static_cast<int>(it - seen.begin()));
    }
    return hx::Partition::from_labels(codes);
}

void parse_hig_override(hx::RunConfig& cfg, const std::vector<std::string>& specs) {
    for (const auto& s : specs) {
        const auto eq = s.find('=');
        const auto comma = s.find(',', eq);
        if (eq == std::string::npos || comma == std::string::npos)
            throw UsageError("--hig expects NAME=V,W, got '" + s + "'");
        cfg.hig_overrides[s.substr(0, eq)] = {std::stod(s.substr(eq + 1, comma - eq - 1)),
                                              std::stod(s.substr(comma + 1))};
    }
}

// Pools thinned allocation records from every chain of a run directory.
std::vector<std::vector<int>> pooled_allocations(const hx::fs::path& run_dir, int chains) {
    std::vector<std::vector<int>> pooled;
    if (chains <= 1) {
        pooled = hx::read_allocations_csv(run_dir / "allocations.csv");
    } else {
        for (int c = 0; c < chains; ++c) {
            auto part = hx::read_allocations_csv(run_dir / ("chain_" + std::to_string(c)) /
                                                 "allocations.csv");
            pooled.insert(pooled.end(), part.begin(), part.end());
        }
    }
    return pooled;
}

hx::ChainTrace trace_from_records(std::vector<std::vector<int>> records) {
    hx::ChainTrace t;
    for (auto& z : records) {
        hx::TraceRecord rec;
        rec.z = std::move(z);
        t.records.push_back(std::move(rec));
    }
    return t;
}

// Writes psm.csv, partition.csv and clusters.json from pooled records.
hx::Partition write_summaries(const hx::fs::path& run_dir, const hx::CategoricalDataset& data,
                              const hx::ModelConfig& mc, const hx::RunConfig& cfg,
                              const std::vector<std::vector<int>>& records) {
    const hx::ChainTrace pooled = trace_from_records(records);
    hx::write_psm_csv(run_dir / "psm.csv", hx::similarity_matrix(pooled));
    const hx::Partition est = hx::point_estimate_vi(pooled);
    hx::write_partition_csv(run_dir / "partition.csv", est);
    const auto params = hx::conditional_param_summary(data, est, mc,
                                                      static_cast<int>(cfg.summary_extra_iters),
                                                      cfg.seed);
    std::optional<hx::SilhouetteResult> sil;
    if (est.k >= 2) sil = hx::silhouette_hamming(data, est);
    const hx::json cj = hx::clusters_json(data, est, params, sil ? &*sil : nullptr);
    std::ofstream(run_dir / "clusters.json") << cj.dump(2) << "\n";
    return est;
}

int cmd_fit(const hx::RunConfig& cfg) {
    cfg.validate();
    if (cfg.data_path.empty()) throw UsageError("fit: --data is required");
    if (cfg.out_dir.empty()) throw UsageError("fit: --out is required");
    const hx::CategoricalDataset data =
        hx::load_dataset_file(cfg.data_path, cfg.delimiter, cfg.header);
    std::cout << data.summary();
    for (const auto& w : data.warnings) std::cerr << "warning: " << w << "\n";
    const hx::ModelConfig mc = hx::build_model_config(cfg, data);
    const hx::fs::path run_dir(cfg.out_dir);
    hx::fs::create_directories(run_dir);

    std::vector<hx::ChainTrace> traces(cfg.chains);
    std::atomic<int> next{0};
    const auto worker = [&] {
        for (int c; (c = next.fetch_add(1)) < cfg.chains;) {
            hx::GibbsSampler sampler(data, mc);
            traces[c] = sampler.run(cfg.iters, cfg.burnin, cfg.thin, cfg.seed, c);
        }
    };
    const unsigned n_threads =
        std::min<unsigned>({2, static_cast<unsigned>(cfg.chains),
                            std::max(1u, std::thread::hardware_concurrency())});
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    std::vector<std::vector<int>> records;
    hx::json chain_meta = hx::json::array();
    for (int c = 0; c < cfg.chains; ++c) {
        const hx::fs::path dir =
            cfg.chains == 1 ? run_dir : run_dir / ("chain_" + std::to_string(c));
        hx::write_chain_trace(dir, traces[c]);
        for (const auto& rec : traces[c].records) records.push_back(rec.z);
        chain_meta.push_back({{"chain", c},
                              {"seconds", traces[c].seconds},
                              {"mh_acceptance_rate", traces[c].mh_acceptance_rate()}});
    }
    const hx::Partition est = write_summaries(run_dir, data, mc, cfg, records);

    hx::json meta;
    meta["config"] = hx::run_config_to_json(cfg);
    meta["chains"] = chain_meta;
    meta["shared_sigma_layout"] = "per-component";
    hx::json vars = hx::json::array();
    for (int j = 0; j < data.p; ++j)
        vars.push_back({{"name", data.variable_names[j]},
                        {"m", data.alphabets[j].m()},
                        {"labels", data.alphabets[j].labels},
                        {"v", mc.hig_priors[j].v},
                        {"w", mc.hig_priors[j].w}});
    meta["dataset"] = {{"path", cfg.data_path}, {"n", data.n}, {"p", data.p}, {"variables", vars}};
    std::ofstream(run_dir / "meta.json") << meta.dump(2) << "\n";

    std::cout << "estimated clusters: " << est.k << "\nsizes:";
    for (int s : est.sizes()) std::cout << ' ' << s;
    std::cout << "\nrun directory: " << run_dir.string() << "\n";
    return 0;
}

int cmd_summarize(const std::string& run, const std::string& data_override) {
    const hx::fs::path run_dir(run);
    std::ifstream meta_in(run_dir / "meta.json");
    if (!meta_in) throw UsageError("summarize: no meta.json under " + run);
    hx::json meta = hx::json::parse(meta_in);
    hx::RunConfig cfg;
    hx::run_config_apply_json(cfg, meta.at("config"));
    if (!data_override.empty()) cfg.data_path = data_override;
    const hx::CategoricalDataset data =
        hx::load_dataset_file(cfg.data_path, cfg.delimiter, cfg.header);
    const hx::ModelConfig mc = hx::build_model_config(cfg, data);
    const auto records = pooled_allocations(run_dir, cfg.chains);
    const hx::Partition est = write_summaries(run_dir, data, mc, cfg, records);
    std::cout << "estimated clusters: " << est.k << "\n";
    return 0;
}

int cmd_diag(const std::string& run) {
    std::ifstream in(hx::fs::path(run) / "clusters.json");
    if (!in) throw UsageError("diag: no clusters.json under " + run + " (run fit or summarize)");
    const hx::json cj = hx::json::parse(in);
    std::cout << "cluster,size,gini_normalized,shannon_normalized,silhouette_mean\n";
    for (const auto& c : cj.at("clusters")) {
        std::cout << c.at("cluster") << ',' << c.at("size") << ',' << c.at("gini_normalized")
                  << ',' << c.at("shannon_normalized") << ',';
        if (c.contains("silhouette_mean"))
            std::cout << c.at("silhouette_mean");
        std::cout << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian clustering of categorical data via Hamming mixture models"};
    app.require_subcommand(1);

    // fit
    auto* fit = app.add_subcommand("fit", "run the Gibbs sampler on a dataset");
    hx::RunConfig fit_cfg;
    std::string config_path;
    std::vector<std::string> hig_specs;
    std::string delimiter_str;
    bool no_header = false;
    fit->add_option("--config", config_path, "JSON config file (flags override it)");
    fit->add_option("--data", fit_cfg.data_path, "dataset (delimited text)");
    fit->add_option("--out", fit_cfg.out_dir, "run directory to create");
    auto* o_iters = fit->add_option("--iters", fit_cfg.iters, "total iterations");
    auto* o_burn = fit->add_option("--burnin", fit_cfg.burnin, "burn-in iterations");
    auto* o_thin = fit->add_option("--thin", fit_cfg.thin, "thinning stride");
    auto* o_seed = fit->add_option("--seed", fit_cfg.seed, "random seed");
    auto* o_chains = fit->add_option("--chains", fit_cfg.chains, "independent chains");
    auto* o_gamma = fit->add_option("--gamma", fit_cfg.gamma, "weight shape gamma");
    auto* o_lambda = fit->add_option("--lambda", fit_cfg.lambda, "Poisson intensity for L-1");
    auto* o_shared = fit->add_flag("--shared-sigma", fit_cfg.shared_sigma,
                                   "one scale per component, common across variables");
    auto* o_mhsd = fit->add_option("--mh-sd", fit_cfg.mh_proposal_sd,
                                   "shared-sigma Metropolis proposal sd (log scale)");
    auto* o_extra =
        fit->add_option("--extra-iters", fit_cfg.summary_extra_iters,
                        "parameter-block sweeps for the conditional cluster summaries");
    fit->add_option("--hig", hig_specs, "per-variable prior override NAME=V,W")->take_all();
    fit->add_option("--delimiter", delimiter_str, "field delimiter (default ,)");
    fit->add_flag("--no-header", no_header, "dataset has no header row");

    // summarize
    auto* summ = app.add_subcommand("summarize", "recompute summaries from a run directory");
    std::string summ_run, summ_data;
    summ->add_option("run", summ_run, "run directory")->required();
    summ->add_option("--data", summ_data, "override the dataset path recorded in meta.json");

    // elicit
    auto* eli = app.add_subcommand("elicit", "choose gamma for a target prior number of clusters");
    long eli_n = 0;
    double eli_lambda = 1;
    int eli_k = 1;
    std::string eli_stat = "mean";
    int gini_m = 0, gini_draws = 10000;
    double gini_v = 0, gini_w = 0;
    std::uint64_t eli_seed = 1;
    eli->add_option("--n", eli_n, "sample size");
    eli->add_option("--lambda", eli_lambda, "Poisson intensity for L-1");
    eli->add_option("--k", eli_k, "target number of clusters K*");
    eli->add_option("--statistic", eli_stat, "mean or mode (default mean)");
    eli->add_option("--gini-mc-m", gini_m,
                    "instead: modality count for a Monte Carlo table of the prior Gini index");
    eli->add_option("--gini-mc-v", gini_v, "prior v for the Gini table (default by m)");
    eli->add_option("--gini-mc-w", gini_w, "prior w for the Gini table (default by m)");
    eli->add_option("--draws", gini_draws, "Monte Carlo draws for the Gini table");
    eli->add_option("--seed", eli_seed, "seed for the Gini table");

    // prior-k
    auto* pk = app.add_subcommand("prior-k", "tabulate the prior on the number of clusters");
    long pk_n = 0;
    double pk_gamma = 1, pk_lambda = 1;
    pk->add_option("--n", pk_n, "sample size")->required();
    pk->add_option("--gamma", pk_gamma, "weight shape gamma")->required();
    pk->add_option("--lambda", pk_lambda, "Poisson intensity for L-1")->required();

    // simulate
    auto* sim = app.add_subcommand("simulate", "run a synthetic recovery study");
    int sim_id = 1, sim_reps = 10;
    std::uint64_t sim_seed = 1;
    hx::StudyOverrides sim_ov;
    std::string sim_out;
    sim->add_option("--scenario", sim_id, "scenario id 1..4")->required();
    sim->add_option("--replicates", sim_reps, "replicates");
    sim->add_option("--seed", sim_seed, "seed");
    sim->add_option("--iters", sim_ov.iters, "iterations per fit");
    sim->add_option("--burnin", sim_ov.burnin, "burn-in per fit");
    sim->add_option("--thin", sim_ov.thin, "thinning per fit");
    sim->add_option("--kmodes-restarts", sim_ov.kmodes_restarts, "restarts per K-modes run");
    sim->add_option("--lambda", sim_ov.lambda, "override lambda (default: true K)");
    sim->add_option("--gamma", sim_ov.gamma, "override gamma (default: elicited)");
    sim->add_option("--out", sim_out, "write the report here instead of stdout");

    // baseline
    auto* base = app.add_subcommand("baseline", "K-modes baseline with restarts");
    std::string base_data, base_truth, base_out;
    int base_k = 2, base_restarts = 100, base_max_iter = 100;
    std::uint64_t base_seed = 1;
    std::string base_delim;
    bool base_no_header = false;
    base->add_option("--data", base_data, "dataset")->required();
    base->add_option("--k", base_k, "number of clusters")->required();
    base->add_option("--restarts", base_restarts, "random restarts");
    base->add_option("--max-iter", base_max_iter, "iteration cap per restart");
    base->add_option("--seed", base_seed, "seed");
    base->add_option("--truth", base_truth, "labels file; reports the adjusted Rand index");
    base->add_option("--out", base_out, "write the partition here instead of stdout");
    base->add_option("--delimiter", base_delim, "field delimiter (default ,)");
    base->add_flag("--no-header", base_no_header, "dataset has no header row");

    // diag
    auto* diag = app.add_subcommand("diag", "per-cluster heterogeneity diagnostics of a run");
    std::string diag_run;
    diag->add_option("run", diag_run, "run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (fit->parsed()) {
            if (!config_path.empty()) {
                std::ifstream cf(config_path);
                if (!cf) throw UsageError("cannot open config: " + config_path);
                hx::RunConfig from_file;
                hx::run_config_apply_json(from_file, hx::json::parse(cf));
                // flags win over the file
                if (!*o_iters) fit_cfg.iters = from_file.iters;
                if (!*o_burn) fit_cfg.burnin = from_file.burnin;
                if (!*o_thin) fit_cfg.thin = from_file.thin;
                if (!*o_seed) fit_cfg.seed = from_file.seed;
                if (!*o_chains) fit_cfg.chains = from_file.chains;
                if (!*o_gamma) fit_cfg.gamma = from_file.gamma;
                if (!*o_lambda) fit_cfg.lambda = from_file.lambda;
                if (!*o_shared) fit_cfg.shared_sigma = from_file.shared_sigma;
                if (!*o_mhsd) fit_cfg.mh_proposal_sd = from_file.mh_proposal_sd;
                if (!*o_extra) fit_cfg.summary_extra_iters = from_file.summary_extra_iters;
                fit_cfg.shared_sigma_a = from_file.shared_sigma_a;
                fit_cfg.shared_sigma_b = from_file.shared_sigma_b;
                if (fit_cfg.data_path.empty()) fit_cfg.data_path = from_file.data_path;
                if (fit_cfg.out_dir.empty()) fit_cfg.out_dir = from_file.out_dir;
                if (delimiter_str.empty() && from_file.delimiter != ',')
                    fit_cfg.delimiter = from_file.delimiter;
                if (!no_header) fit_cfg.header = from_file.header;
                for (const auto& [k, v] : from_file.hig_overrides)
                    fit_cfg.hig_overrides.emplace(k, v);  // flag overrides keep priority
            }
            parse_hig_override(fit_cfg, hig_specs);
            if (!delimiter_str.empty()) {
                if (delimiter_str.size() != 1) throw UsageError("--delimiter must be one character");
                fit_cfg.delimiter = delimiter_str[0];
            }
            if (no_header) fit_cfg.header = false;
            return cmd_fit(fit_cfg);
        }
        if (summ->parsed()) return cmd_summarize(summ_run, summ_data);
        if (eli->parsed()) {
            if (gini_m > 0) {
                hx::HigParams hp = hx::default_hig_for_m(gini_m);
                if (gini_v > 0) hp.v = gini_v;
                if (gini_w > 0) hp.w = gini_w;
                hx::RngStream rng(eli_seed);
                const auto sample = hx::gini_prior_montecarlo({hp}, gini_draws, rng);
                std::cout << "draw,gini_normalized\n";
                for (size_t i = 0; i < sample.size(); ++i)
                    std::cout << i + 1 << ',' << sample[i] << "\n";
                return 0;
            }
            if (eli_n < 1) throw UsageError("elicit: --n is required");
            const auto stat = eli_stat == "mean"   ? hx::CenterStatistic::Mean
                              : eli_stat == "mode" ? hx::CenterStatistic::Mode
                                                   : throw UsageError("--statistic: mean or mode");
            std::cout << hx::elicit_gamma(static_cast<int>(eli_n), eli_lambda, eli_k, stat)
                      << "\n";
            return 0;
        }
        if (pk->parsed()) {
            hx::ModelConfig mc;
            mc.gamma = pk_gamma;
            mc.lambda = pk_lambda;
            const hx::PriorK prior = hx::prior_k_pmf(static_cast<int>(pk_n), mc);
            std::cout << "# mean=" << prior.mean() << " mode=" << prior.mode()
                      << " defect=" << prior.defect << "\nK,probability\n";
            for (size_t i = 0; i < prior.pmf.size(); ++i)
                std::cout << i + 1 << ',' << prior.pmf[i] << "\n";
            return 0;
        }
        if (sim->parsed()) {
            const hx::StudyReport rep = hx::run_study(sim_id, sim_reps, sim_ov, sim_seed);
            const std::string text = hx::study_report_text(rep);
            if (sim_out.empty()) {
                std::cout << text;
            } else {
                std::ofstream(sim_out) << text;
            }
            return 0;
        }
        if (base->parsed()) {
            const char delim = base_delim.empty() ? ',' : base_delim[0];
            const auto data = hx::load_dataset_file(base_data, delim, !base_no_header);
            hx::RngStream rng(base_seed);
            const hx::KModesResult res =
                hx::kmodes(data, base_k, base_restarts, base_max_iter, rng);
            std::ostringstream out;
            out << "index,label\n";
            for (int i = 0; i < res.partition.n(); ++i)
                out << i + 1 << ',' << res.partition.labels[i] + 1 << "\n";
            if (base_out.empty()) {
                std::cout << out.str();
            } else {
                std::ofstream(base_out) << out.str();
            }
            std::cerr << "cost=" << res.cost << " restarts=" << base_restarts
                      << " best_restart=" << res.restart_index << "\n";
            if (!base_truth.empty()) {
                const hx::Partition truth = read_truth_labels(base_truth);
                std::cout << "ari=" << hx::adjusted_rand_index(res.partition, truth) << "\n";
            }
            return 0;
        }
        if (diag->parsed()) return cmd_diag(diag_run);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const hx::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const hx::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
