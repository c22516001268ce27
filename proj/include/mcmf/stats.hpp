#pragma once

// Probability primitives: reproducible random streams, exact Poisson sampling
// for any mean, the mean-subtracted Poisson PMF, the Gaussian Q-function, and
// the exact interference covariance over equiprobable ISI bit patterns.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mcmf/channel.hpp"

namespace mcmf {

namespace detail {

// splitmix64 finalizer; bijective, so distinct inputs give distinct outputs.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_stream_state(std::uint64_t seed, std::uint64_t stream) {
    return mix64(seed + 0x9e3779b97f4a7c15ULL * (stream + 1));
}

}  // namespace detail

// A self-contained pseudorandom stream addressed by (seed, stream index).
// Identical addresses reproduce identical draw sequences bit-for-bit; that
// contract is what makes parallel simulation results scheduling-independent.
class RandomStream {
   public:
    explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0)
        : engine_(detail::derive_stream_state(seed, stream)) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    int next_bit() { return static_cast<int>(engine_() >> 63); }

   private:
    std::mt19937_64 engine_;
};

// Exact Poisson(lambda) draw. Sequential inversion below lambda = 10, the
// Hormann PTRS transformed-rejection sampler above; both are distribution
// exact (no normal approximation), which keeps deep BER tails honest.
inline long long sample_poisson(double lambda, RandomStream& rng) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("sample_poisson: lambda must be finite and >= 0");
    if (lambda == 0.0) return 0;

    if (lambda < 10.0) {
        double p = std::exp(-lambda);
        double cum = p;
        long long k = 0;
        const double u = rng.next_unit();
        while (u > cum) {
            ++k;
            p *= lambda / static_cast<double>(k);
            cum += p;
            if (p <= 0.0) break;  // mass exhausted by rounding; clamp to the tail
        }
        return k;
    }

    const double b = 0.931 + 2.53 * std::sqrt(lambda);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_lambda = std::log(lambda);
    for (;;) {
        const double u = rng.next_unit() - 0.5;
        const double v = rng.next_unit();
        const double us = 0.5 - std::abs(u);
        const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<long long>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
            k * log_lambda - lambda - std::lgamma(k + 1.0))
            return static_cast<long long>(k);
    }
}

// PMF of a Poisson(lambda) variable with its mean subtracted: mass at
// x = j - lambda for integer j >= 0 equals the Poisson mass at j. Zero mean,
// variance lambda. Evaluated in log space so means up to ~1e6 do not overflow.
inline double shifted_poisson_pmf(double lambda, double x) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("shifted_poisson_pmf: lambda must be finite and >= 0");
    if (lambda == 0.0) return x == 0.0 ? 1.0 : 0.0;
    const double j = x + lambda;
    const double j_round = std::round(j);
    if (j_round < 0.0 || std::abs(j - j_round) > 1e-9 * std::max(1.0, std::abs(j)))
        return 0.0;
    return std::exp(j_round * std::log(lambda) - lambda - std::lgamma(j_round + 1.0));
}

// Gaussian upper-tail probability.
inline double q_function(double x) { return 0.5 * std::erfc(x * M_SQRT1_2); }

// The L-1 previous symbols, most recent first: bits[j] = s[k-1-j], which is
// the symbol consumed by tap row l = j+2.
struct IsiPattern {
    std::vector<int> bits;

    static IsiPattern from_index(std::uint32_t index, int length) {
        IsiPattern s;
        s.bits.resize(length);
        for (int j = 0; j < length; ++j) s.bits[j] = (index >> j) & 1u;
        return s;
    }

    void validate() const {
        for (int b : bits)
            if (b != 0 && b != 1)
                throw std::invalid_argument("isi pattern: elements must be 0 or 1");
    }
};

struct InterferenceCov {
    Eigen::MatrixXd mat;
};

// Expected interference count per sample conditioned on a fixed ISI pattern:
// the constant external term plus the active past taps.
inline Eigen::VectorXd interference_mean(const Cir& cir, const IsiPattern& s, double c_ext) {
    if (static_cast<int>(s.bits.size()) != cir.memory() - 1)
        throw std::invalid_argument("interference_mean: pattern length must be l_taps - 1");
    s.validate();
    Eigen::VectorXd mean = Eigen::VectorXd::Constant(cir.samples(), c_ext);
    for (int j = 0; j < static_cast<int>(s.bits.size()); ++j)
        if (s.bits[j]) mean += cir.taps.row(j + 1).transpose();
    return mean;
}

// Covariance of the interference counts, exact by enumeration of all 2^(L-1)
// equiprobable patterns. Off-diagonal entries carry only the pattern
// randomness; diagonal entries add the conditional Poisson variance (= mean).
inline InterferenceCov interference_covariance(const Cir& cir, double c_ext) {
    cir.validate();
    if (!(c_ext >= 0.0)) throw std::invalid_argument("interference_covariance: c_ext >= 0 violated");
    const int history = cir.memory() - 1;
    if (history > 24)
        throw std::invalid_argument("interference_covariance: l_taps - 1 <= 24 violated (pattern enumeration)");
    const int m = cir.samples();
    const std::uint32_t n_patterns = 1u << history;

    Eigen::VectorXd sum_mean = Eigen::VectorXd::Zero(m);
    Eigen::MatrixXd sum_outer = Eigen::MatrixXd::Zero(m, m);
    for (std::uint32_t idx = 0; idx < n_patterns; ++idx) {
        const Eigen::VectorXd mean =
            interference_mean(cir, IsiPattern::from_index(idx, history), c_ext);
        sum_mean += mean;
        sum_outer += mean * mean.transpose();
    }
    const double inv_n = 1.0 / static_cast<double>(n_patterns);
    const Eigen::VectorXd e_mean = sum_mean * inv_n;
    Eigen::MatrixXd cov = sum_outer * inv_n - e_mean * e_mean.transpose();
    cov.diagonal() += e_mean;  // law of total variance: Poisson part
    return InterferenceCov{std::move(cov)};
}

}  // namespace mcmf
