// Experiment runner for the molecule-counting matched-filter study.
//
//   run  --config <path> [--out <dir>] [--seed <u64>] [--trials <n>]
//        [--filters matched,sum,correlator,peak] [--workers <n>]
//   cir  --config <path> [--n-tx <count>]
//   tref --config <path>

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mcmf/sweep.hpp"

namespace {

mcmf::ExperimentConfig load_config(const std::string& path) { return mcmf::parse_config(path); }

int run_command(const std::string& config_path, const std::string& out_dir,
                const std::string& seed_str, long long trials, const std::string& filters,
                int workers) {
    mcmf::ExperimentConfig cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (!seed_str.empty()) cfg.seed = std::stoull(seed_str);
    if (trials > 0) cfg.trials = trials;
    if (workers > 0) cfg.workers = workers;
    if (!filters.empty()) {
        cfg.filter_set.clear();
        for (const std::string& name : mcmf::detail::split_list(filters))
            cfg.filter_set.push_back(mcmf::detail::parse_filter_name("--filters", 0, name));
    }
    const mcmf::SweepOutputs outputs = mcmf::run_sweep(cfg);
    for (const auto& file : outputs.files) std::cout << file.string() << "\n";
    return 0;
}

int cir_command(const std::string& config_path, double n_tx) {
    mcmf::ExperimentConfig cfg = load_config(config_path);
    mcmf::ChannelParams p = cfg.channel;
    p.n_tx = n_tx;
    const mcmf::TimingConfig tc{cfg.m_samples, cfg.l_taps, cfg.dt_norm, cfg.t_symb_norm.front()};
    const mcmf::Cir cir = mcmf::build_cir(p, tc);
    for (int l = 0; l < cir.memory(); ++l) {
        for (int m = 0; m < cir.samples(); ++m) {
            if (m) std::cout << ',';
            std::cout << mcmf::format_double(cir.taps(l, m));
        }
        std::cout << "\n";
    }
    return 0;
}

int tref_command(const std::string& config_path) {
    mcmf::ExperimentConfig cfg = load_config(config_path);
    mcmf::ChannelParams p = cfg.channel;
    p.n_tx = 1.0;
    std::cout << mcmf::format_double(mcmf::reference_time(p)) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"matched-filter designer and sweep runner for molecule-counting receivers"};
    app.require_subcommand(1);

    std::string config_path, out_dir, seed_str, filters;
    long long trials = 0;
    int workers = 0;
    double n_tx = 1.0;

    CLI::App* run = app.add_subcommand("run", "run the full sweep and write CSV outputs");
    run->add_option("--config", config_path, "config file path")->required();
    run->add_option("--out", out_dir, "output directory (overrides config)");
    run->add_option("--seed", seed_str, "master seed (overrides config)");
    run->add_option("--trials", trials, "trials per sweep point (overrides config)");
    run->add_option("--filters", filters, "comma-separated filter subset (overrides config)");
    run->add_option("--workers", workers, "worker threads (overrides config; never changes results)");

    CLI::App* cir = app.add_subcommand("cir", "print the channel impulse response matrix as CSV");
    cir->add_option("--config", config_path, "config file path")->required();
    cir->add_option("--n-tx", n_tx, "released molecules for the printed response (default 1)");

    CLI::App* tref = app.add_subcommand("tref", "print the computed reference time in seconds");
    tref->add_option("--config", config_path, "config file path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return run_command(config_path, out_dir, seed_str, trials, filters, workers);
        if (cir->parsed()) return cir_command(config_path, n_tx);
        if (tref->parsed()) return tref_command(config_path);
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
