#pragma once

// Experiment runner: flat key=value config parsing, the released-molecule
// sweep over every configured filter and symbol duration, and deterministic
// CSV/manifest emission (LF endings, shortest round-trip float formatting).

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcmf/channel.hpp"
#include "mcmf/detection.hpp"
#include "mcmf/filters.hpp"
#include "mcmf/montecarlo.hpp"
#include "mcmf/stats.hpp"

namespace mcmf {

inline const char* version() { return "0.1.0"; }

// Shortest decimal string that parses back to exactly the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct ExperimentConfig {
    ChannelParams channel = ChannelParams::lab_defaults(1.0);  // n_tx filled per sweep point
    int m_samples = 6;
    int l_taps = 3;
    double dt_norm = 0.25;
    std::vector<double> t_symb_norm = {1.5, 3.0};
    std::vector<double> n_tx_grid;  // default: 13 log-spaced points on [1e4, 1e5]
    std::vector<FilterKind> filter_set = {FilterKind::matched, FilterKind::sum,
                                          FilterKind::correlator, FilterKind::peak};
    long long trials = 100000;
    int warmup = 16;
    std::uint64_t seed = 42;
    int workers = 0;
    std::string out_dir = "out";

    ExperimentConfig() { n_tx_grid = log_grid(1e4, 1e5, 13); }

    static std::vector<double> log_grid(double lo, double hi, int points) {
        if (points < 1) throw std::invalid_argument("config: n_tx_points >= 1 violated");
        if (!(lo > 0.0) || !(hi >= lo))
            throw std::invalid_argument("config: 0 < n_tx_min <= n_tx_max violated");
        std::vector<double> grid(static_cast<std::size_t>(points));
        if (points == 1) {
            grid[0] = lo;
            return grid;
        }
        const double llo = std::log10(lo), lhi = std::log10(hi);
        for (int i = 0; i < points; ++i)
            grid[static_cast<std::size_t>(i)] =
                std::pow(10.0, llo + (lhi - llo) * i / (points - 1));
        return grid;
    }

    void validate() const {
        channel.validate();
        for (double tsym : t_symb_norm)
            TimingConfig{m_samples, l_taps, dt_norm, tsym}.validate();
        if (t_symb_norm.empty())
            throw std::invalid_argument("config: t_symb_norm nonempty violated");
        if (n_tx_grid.empty())
            throw std::invalid_argument("config: sweep grid nonempty violated");
        for (std::size_t i = 0; i < n_tx_grid.size(); ++i) {
            if (!(n_tx_grid[i] > 0.0))
                throw std::invalid_argument("config: sweep grid entries positive violated");
            if (i > 0 && !(n_tx_grid[i] > n_tx_grid[i - 1]))
                throw std::invalid_argument("config: sweep grid strictly increasing violated");
        }
        if (filter_set.empty())
            throw std::invalid_argument("config: filter set nonempty violated");
        for (FilterKind k : filter_set)
            if (k == FilterKind::custom)
                throw std::invalid_argument(
                    "config: filter set within {matched,sum,correlator,peak} violated");
        if (trials < 1) throw std::invalid_argument("config: trials >= 1 violated");
        if (warmup < l_taps - 1)
            throw std::invalid_argument("config: warmup >= l_taps - 1 violated");
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        if (comma == std::string::npos) {
            parts.push_back(trim(s.substr(start)));
            break;
        }
        parts.push_back(trim(s.substr(start, comma - start)));
        start = comma + 1;
    }
    return parts;
}

[[noreturn]] inline void config_error(const std::string& path, int line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

inline double parse_number(const std::string& path, int line, const std::string& key,
                           const std::string& value) {
    double out = 0.0;
    const char* begin = value.data();
    const char* end = begin + value.size();
    const auto res = std::from_chars(begin, end, out);
    if (res.ec != std::errc{} || res.ptr != end)
        config_error(path, line, "invalid number for key '" + key + "': '" + value + "'");
    return out;
}

inline FilterKind parse_filter_name(const std::string& path, int line, const std::string& name) {
    if (name == "matched") return FilterKind::matched;
    if (name == "sum") return FilterKind::sum;
    if (name == "correlator") return FilterKind::correlator;
    if (name == "peak") return FilterKind::peak;
    config_error(path, line, "unknown filter '" + name +
                                 "' (filter set within {matched,sum,correlator,peak} violated)");
}

inline std::uint64_t sweep_seed(std::uint64_t master, std::uint64_t duration,
                                std::uint64_t point, std::uint64_t filter) {
    std::uint64_t h = mix64(master + 0x9e3779b97f4a7c15ULL * (duration + 1));
    h = mix64(h + 0x9e3779b97f4a7c15ULL * (point + 1));
    return mix64(h + 0x9e3779b97f4a7c15ULL * (filter + 1));
}

inline Filter build_filter(FilterKind kind, const Cir& cir, const InterferenceCov& cov) {
    switch (kind) {
        case FilterKind::matched: return matched_filter(cir, cov);
        case FilterKind::sum: return sum_filter(cir.samples());
        case FilterKind::correlator: return correlator_filter(cir);
        case FilterKind::peak: return peak_filter(cir);
        default: throw std::invalid_argument("build_filter: unsupported filter kind");
    }
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("cannot write output file " + path.string());
}

}  // namespace detail

// Flat `key = value` config with '#' comments. Unknown keys are errors; every
// omitted key takes the default experiment value. Numbers accept the usual
// decimal/scientific forms; list-valued keys take comma-separated entries.
inline ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open config file");

    ExperimentConfig cfg;
    double n_tx_min = 1e4, n_tx_max = 1e5;
    int n_tx_points = 13;
    bool grid_explicit = false;
    bool kd_override = false;
    double kd = 0.0;

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = detail::trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            detail::config_error(path, line_no, "expected 'key = value', got '" + stripped + "'");
        const std::string key = detail::trim(stripped.substr(0, eq));
        const std::string value = detail::trim(stripped.substr(eq + 1));
        if (key.empty()) detail::config_error(path, line_no, "missing key before '='");
        if (value.empty()) detail::config_error(path, line_no, "missing value for key '" + key + "'");

        const auto num = [&] { return detail::parse_number(path, line_no, key, value); };
        const auto integer = [&](const char* invariant) {
            const double v = num();
            if (v != std::floor(v) || std::abs(v) > 9.2e18)
                detail::config_error(path, line_no,
                                     std::string("integer value required: ") + invariant);
            return static_cast<long long>(v);
        };

        if (key == "v_rx") cfg.channel.v_rx = num();
        else if (key == "d") cfg.channel.d = num();
        else if (key == "diff_coeff") cfg.channel.diff_coeff = num();
        else if (key == "enzyme_conc") cfg.channel.enzyme_conc = num();
        else if (key == "kappa") cfg.channel.kappa = num();
        else if (key == "degradation_rate") { kd = num(); kd_override = true; }
        else if (key == "v_par") cfg.channel.v_par = num();
        else if (key == "v_perp") cfg.channel.v_perp = num();
        else if (key == "c_ext") cfg.channel.c_ext = num();
        else if (key == "m_samples") cfg.m_samples = static_cast<int>(integer("m_samples"));
        else if (key == "l_taps") cfg.l_taps = static_cast<int>(integer("l_taps"));
        else if (key == "dt_norm") cfg.dt_norm = num();
        else if (key == "t_symb_norm") {
            cfg.t_symb_norm.clear();
            for (const std::string& part : detail::split_list(value))
                cfg.t_symb_norm.push_back(detail::parse_number(path, line_no, key, part));
        } else if (key == "n_tx_min") n_tx_min = num();
        else if (key == "n_tx_max") n_tx_max = num();
        else if (key == "n_tx_points") n_tx_points = static_cast<int>(integer("n_tx_points"));
        else if (key == "n_tx_grid") {
            cfg.n_tx_grid.clear();
            for (const std::string& part : detail::split_list(value))
                cfg.n_tx_grid.push_back(detail::parse_number(path, line_no, key, part));
            grid_explicit = true;
        } else if (key == "filters") {
            cfg.filter_set.clear();
            for (const std::string& part : detail::split_list(value))
                cfg.filter_set.push_back(detail::parse_filter_name(path, line_no, part));
        } else if (key == "trials") cfg.trials = integer("trials");
        else if (key == "warmup") cfg.warmup = static_cast<int>(integer("warmup"));
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(integer("seed"));
        else if (key == "workers") cfg.workers = static_cast<int>(integer("workers"));
        else if (key == "out") cfg.out_dir = value;
        else detail::config_error(path, line_no, "unknown key '" + key + "'");
    }

    if (!grid_explicit) cfg.n_tx_grid = ExperimentConfig::log_grid(n_tx_min, n_tx_max, n_tx_points);
    if (kd_override) cfg.channel = ChannelParams::with_degradation_rate(cfg.channel, kd);
    cfg.validate();
    return cfg;
}

struct SweepOutputs {
    std::vector<std::filesystem::path> files;
};

// Run the full sweep: for every symbol duration, every grid point and every
// configured filter, compute analytical SINR/BER at the optimized threshold,
// simulate the empirical counterparts, and write sinr.csv / ber.csv /
// filter_taps.csv plus a re-parseable manifest into tsymb_<duration>/.
inline SweepOutputs run_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);

    ChannelParams probe = cfg.channel;
    probe.n_tx = 1.0;
    const double t_ref = reference_time(probe);

    SweepOutputs outputs;
    for (std::size_t di = 0; di < cfg.t_symb_norm.size(); ++di) {
        const double tsym = cfg.t_symb_norm[di];
        const fs::path dir = fs::path(cfg.out_dir) / ("tsymb_" + format_double(tsym));
        fs::create_directories(dir);
        const TimingConfig tc{cfg.m_samples, cfg.l_taps, cfg.dt_norm, tsym};

        std::string sinr_csv = "n_tx,filter,sinr_analytical,sinr_empirical,sinr_halfwidth\n";
        std::string ber_csv = "n_tx,filter,threshold,ber_analytical,ber_empirical,ber_halfwidth\n";
        std::string taps_csv = "n_tx,tap_index,weight\n";

        for (std::size_t pi = 0; pi < cfg.n_tx_grid.size(); ++pi) {
            ChannelParams p = cfg.channel;
            p.n_tx = cfg.n_tx_grid[pi];
            const std::string n_tx_str = format_double(p.n_tx);
            const Cir cir = build_cir(p, tc);
            const InterferenceCov cov = interference_covariance(cir, p.c_ext);

            for (std::size_t fi = 0; fi < cfg.filter_set.size(); ++fi) {
                const FilterKind kind = cfg.filter_set[fi];
                const Filter f = detail::build_filter(kind, cir, cov);
                const double sinr_ana = sinr(f, cir, cov);
                const double xi = optimize_threshold(f, cir, p.c_ext);
                const double ber_ana = analytical_ber(f, cir, p.c_ext, xi);
                const SimConfig sim{cfg.trials, cfg.warmup,
                                    detail::sweep_seed(cfg.seed, di, pi, fi), cfg.workers};
                const SimResult r = run_trials(cir, p.c_ext, DetectorSpec{f, xi}, sim);

                sinr_csv += n_tx_str;
                sinr_csv += ',';
                sinr_csv += to_string(kind);
                sinr_csv += ',';
                sinr_csv += format_double(sinr_ana);
                sinr_csv += ',';
                sinr_csv += format_double(r.empirical_sinr);
                sinr_csv += ',';
                sinr_csv += format_double(r.sinr_halfwidth);
                sinr_csv += '\n';

                ber_csv += n_tx_str;
                ber_csv += ',';
                ber_csv += to_string(kind);
                ber_csv += ',';
                ber_csv += format_double(xi);
                ber_csv += ',';
                ber_csv += format_double(ber_ana);
                ber_csv += ',';
                ber_csv += format_double(r.empirical_ber);
                ber_csv += ',';
                ber_csv += format_double(r.ber_halfwidth);
                ber_csv += '\n';

                if (kind == FilterKind::matched)
                    for (int m = 0; m < f.weights.size(); ++m) {
                        taps_csv += n_tx_str;
                        taps_csv += ',';
                        taps_csv += std::to_string(m + 1);
                        taps_csv += ',';
                        taps_csv += format_double(f.weights(m));
                        taps_csv += '\n';
                    }
            }
        }

        std::string manifest;
        manifest += "# run manifest; key = value lines below re-parse as a config file\n";
        manifest += "# version = ";
        manifest += version();
        manifest += "\n";
        manifest += "# t_ref_seconds = " + format_double(t_ref) + "\n";
        manifest += "# t_ref_cross_check_ms = 0.176 (reported reference value; not asserted)\n";
        manifest += "v_rx = " + format_double(cfg.channel.v_rx) + "\n";
        manifest += "d = " + format_double(cfg.channel.d) + "\n";
        manifest += "diff_coeff = " + format_double(cfg.channel.diff_coeff) + "\n";
        manifest += "degradation_rate = " + format_double(cfg.channel.degradation_rate()) + "\n";
        manifest += "v_par = " + format_double(cfg.channel.v_par) + "\n";
        manifest += "v_perp = " + format_double(cfg.channel.v_perp) + "\n";
        manifest += "c_ext = " + format_double(cfg.channel.c_ext) + "\n";
        manifest += "m_samples = " + std::to_string(cfg.m_samples) + "\n";
        manifest += "l_taps = " + std::to_string(cfg.l_taps) + "\n";
        manifest += "dt_norm = " + format_double(cfg.dt_norm) + "\n";
        manifest += "t_symb_norm = " + format_double(tsym) + "\n";
        manifest += "n_tx_grid = ";
        for (std::size_t i = 0; i < cfg.n_tx_grid.size(); ++i) {
            if (i) manifest += ',';
            manifest += format_double(cfg.n_tx_grid[i]);
        }
        manifest += "\n";
        manifest += "filters = ";
        for (std::size_t i = 0; i < cfg.filter_set.size(); ++i) {
            if (i) manifest += ',';
            manifest += to_string(cfg.filter_set[i]);
        }
        manifest += "\n";
        manifest += "trials = " + std::to_string(cfg.trials) + "\n";
        manifest += "warmup = " + std::to_string(cfg.warmup) + "\n";
        manifest += "seed = " + std::to_string(cfg.seed) + "\n";
        manifest += "# workers omitted: execution detail, results are worker-count invariant\n";

        detail::write_file(dir / "sinr.csv", sinr_csv);
        detail::write_file(dir / "ber.csv", ber_csv);
        detail::write_file(dir / "filter_taps.csv", taps_csv);
        detail::write_file(dir / "manifest.txt", manifest);
        outputs.files.push_back(dir / "sinr.csv");
        outputs.files.push_back(dir / "ber.csv");
        outputs.files.push_back(dir / "filter_taps.csv");
        outputs.files.push_back(dir / "manifest.txt");
    }
    return outputs;
}

}  // namespace mcmf
