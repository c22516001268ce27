#pragma once

// Poisson symbol-stream simulation producing empirical BER and SINR with 95%
// confidence half-widths. Trials are partitioned into fixed-size blocks; each
// block owns a private random stream addressed by its block index, so results
// are bit-identical for any worker count and any scheduling order.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "mcmf/channel.hpp"
#include "mcmf/detection.hpp"
#include "mcmf/stats.hpp"

namespace mcmf {

struct SimConfig {
    long long trials = 100000;  // detected symbols after warm-up
    int warmup = 16;            // discarded leading symbols per stream
    std::uint64_t seed = 42;
    int workers = 0;            // <=0: use hardware concurrency

    void validate(int l_taps) const {
        if (trials < 1) throw std::invalid_argument("sim: trials >= 1 violated");
        if (warmup < l_taps - 1)
            throw std::invalid_argument("sim: warmup >= l_taps - 1 violated");
    }
};

struct SimResult {
    double empirical_ber = 0.0;
    double ber_halfwidth = 0.0;
    double empirical_sinr = 0.0;
    double sinr_halfwidth = 0.0;
    long long trials_run = 0;
    long long errors = 0;
};

struct StreamStep {
    int symbol = 0;
    bool warmup = false;
};

// One realization of the observation model: equiprobable OOK symbols, each
// sample conditionally Poisson with mean = active taps + external term.
// History before the stream start is all zeros; the first `warmup` steps are
// emitted but flagged for discard. counts() views the latest observation.
class SymbolStream {
   public:
    SymbolStream(const Cir& cir, double c_ext, int warmup, RandomStream& rng)
        : cir_(&cir),
          c_ext_(c_ext),
          warmup_(warmup),
          rng_(&rng),
          history_(static_cast<std::size_t>(std::max(0, cir.memory() - 1)), 0),
          counts_(cir.samples()) {
        if (!(c_ext >= 0.0)) throw std::invalid_argument("stream: c_ext >= 0 violated");
        if (warmup < 0) throw std::invalid_argument("stream: warmup >= 0 violated");
    }

    StreamStep advance() {
        const int s = rng_->next_bit();
        const auto& taps = cir_->taps;
        for (int m = 0; m < counts_.size(); ++m) {
            double lambda = c_ext_ + (s ? taps(0, m) : 0.0);
            for (std::size_t j = 0; j < history_.size(); ++j)
                if (history_[j]) lambda += taps(static_cast<int>(j) + 1, m);
            counts_(m) = static_cast<double>(sample_poisson(lambda, *rng_));
        }
        if (!history_.empty()) {
            for (std::size_t j = history_.size() - 1; j > 0; --j) history_[j] = history_[j - 1];
            history_[0] = s;
        }
        return StreamStep{s, emitted_++ < warmup_};
    }

    const Eigen::VectorXd& counts() const { return counts_; }

   private:
    const Cir* cir_;
    double c_ext_;
    int warmup_;
    RandomStream* rng_;
    std::vector<int> history_;
    Eigen::VectorXd counts_;
    long long emitted_ = 0;
};

namespace detail {

struct BlockStat {
    long long n = 0;
    long long errors = 0;
    double mean = 0.0;
    double m2 = 0.0;
};

// Pairwise (Chan) merge of two running first/second-moment accumulators.
inline void combine(BlockStat& a, const BlockStat& b) {
    if (b.n == 0) return;
    if (a.n == 0) {
        a = b;
        return;
    }
    const double delta = b.mean - a.mean;
    const long long n = a.n + b.n;
    a.m2 += b.m2 + delta * delta * (static_cast<double>(a.n) * static_cast<double>(b.n) /
                                    static_cast<double>(n));
    a.mean += delta * static_cast<double>(b.n) / static_cast<double>(n);
    a.n = n;
    a.errors += b.errors;
}

// Two-sided 97.5% Student-t quantiles for 1..30 degrees of freedom.
inline double t_quantile_975(int df) {
    static constexpr std::array<double, 30> table = {
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
        2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
        2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
    if (df < 1) return std::numeric_limits<double>::infinity();
    return df <= 30 ? table[df - 1] : 1.96;
}

}  // namespace detail

// Simulate config.trials detected symbols and report empirical BER and SINR.
// The SINR estimator removes the symbol's own mean from the filter output,
// z[k] = f'r[k] - s[k] f'c_s, whose variance is exactly the SINR denominator;
// empirical SINR = 0.5 (f'c_s)^2 / var(z).
inline SimResult run_trials(const Cir& cir, double c_ext, const DetectorSpec& spec,
                            const SimConfig& config) {
    cir.validate();
    spec.validate();
    config.validate(cir.memory());
    if (spec.filter.weights.size() != cir.samples())
        throw std::invalid_argument("run_trials: filter length must match sample count");

    constexpr long long block_size = 4096;
    const long long n_blocks = (config.trials + block_size - 1) / block_size;
    std::vector<detail::BlockStat> stats(static_cast<std::size_t>(n_blocks));
    const Eigen::VectorXd& f = spec.filter.weights;
    const double filtered_signal = f.dot(cir.desired_signal());
    const double xi = spec.threshold;

    const auto run_block = [&](long long b) {
        RandomStream rng(config.seed, static_cast<std::uint64_t>(b));
        SymbolStream stream(cir, c_ext, config.warmup, rng);
        detail::BlockStat st;
        const long long count = std::min(block_size, config.trials - b * block_size);
        for (long long i = 0; i < count + config.warmup; ++i) {
            const StreamStep step = stream.advance();
            if (step.warmup) continue;
            const double y = f.dot(stream.counts());
            st.errors += (y >= xi ? 1 : 0) != step.symbol;
            const double z = y - step.symbol * filtered_signal;
            ++st.n;
            const double delta = z - st.mean;
            st.mean += delta / static_cast<double>(st.n);
            st.m2 += delta * (z - st.mean);
        }
        stats[static_cast<std::size_t>(b)] = st;
    };

    int workers = config.workers > 0 ? config.workers
                                     : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, static_cast<int>(std::min<long long>(workers, n_blocks)));
    if (workers == 1) {
        for (long long b = 0; b < n_blocks; ++b) run_block(b);
    } else {
        std::atomic<long long> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (long long b = next.fetch_add(1); b < n_blocks; b = next.fetch_add(1))
                    run_block(b);
            });
        for (std::thread& t : pool) t.join();
    }

    // Ordered reduction: pooled moments plus 20 contiguous block batches.
    detail::BlockStat pooled;
    std::array<detail::BlockStat, 20> batches{};
    for (long long b = 0; b < n_blocks; ++b) {
        detail::combine(pooled, stats[static_cast<std::size_t>(b)]);
        detail::combine(batches[static_cast<std::size_t>((b * 20) / n_blocks)],
                        stats[static_cast<std::size_t>(b)]);
    }

    SimResult result;
    result.trials_run = pooled.n;
    result.errors = pooled.errors;
    result.empirical_ber = static_cast<double>(pooled.errors) / static_cast<double>(pooled.n);
    if (pooled.errors == 0 || pooled.errors == pooled.n) {
        result.ber_halfwidth = std::log(40.0) / static_cast<double>(pooled.n);
    } else {
        const double p = result.empirical_ber;
        result.ber_halfwidth = 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(pooled.n));
    }

    const double variance = pooled.n >= 2 ? pooled.m2 / static_cast<double>(pooled.n - 1) : 0.0;
    if (variance > 0.0)
        result.empirical_sinr = 0.5 * filtered_signal * filtered_signal / variance;
    else
        result.empirical_sinr =
            filtered_signal == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();

    std::vector<double> batch_sinr;
    for (const detail::BlockStat& st : batches)
        if (st.n >= 2 && st.m2 > 0.0)
            batch_sinr.push_back(0.5 * filtered_signal * filtered_signal /
                                 (st.m2 / static_cast<double>(st.n - 1)));
    if (batch_sinr.size() >= 2) {
        double mean = 0.0;
        for (double s : batch_sinr) mean += s;
        mean /= static_cast<double>(batch_sinr.size());
        double ss = 0.0;
        for (double s : batch_sinr) ss += (s - mean) * (s - mean);
        const double sd = std::sqrt(ss / static_cast<double>(batch_sinr.size() - 1));
        result.sinr_halfwidth = detail::t_quantile_975(static_cast<int>(batch_sinr.size()) - 1) *
                                sd / std::sqrt(static_cast<double>(batch_sinr.size()));
    } else {
        result.sinr_halfwidth = std::numeric_limits<double>::infinity();
    }
    return result;
}

}  // namespace mcmf
