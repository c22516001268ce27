#pragma once

// Threshold detection on the filter output, Gaussian moment matching for the
// conditional decision variable, the pattern-averaged analytical BER, and a
// deterministic threshold optimizer (grid + golden-section refinement).

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mcmf/channel.hpp"
#include "mcmf/filters.hpp"
#include "mcmf/stats.hpp"

namespace mcmf {

struct DetectorSpec {
    Filter filter;
    double threshold = 0.0;

    void validate() const {
        if (!std::isfinite(threshold))
            throw std::invalid_argument("detector: threshold must be finite");
    }
};

// Conditional mean/variance of the filter output under each transmitted bit,
// for one fixed ISI pattern. The variance equals the filtered conditional mean
// because every sample is conditionally Poisson.
struct GaussianMoments {
    double mu0 = 0.0;
    double var0 = 0.0;
    double mu1 = 0.0;
    double var1 = 0.0;
};

inline int detect(const DetectorSpec& spec, const Eigen::VectorXd& observations) {
    spec.validate();
    if (observations.size() != spec.filter.weights.size())
        throw std::invalid_argument("detect: observation length must match filter length");
    return spec.filter.weights.dot(observations) >= spec.threshold ? 1 : 0;
}

inline GaussianMoments gaussian_moments(const Filter& f, const Cir& cir, const IsiPattern& s,
                                        double c_ext) {
    if (f.weights.size() != cir.samples())
        throw std::invalid_argument("gaussian_moments: filter length must match sample count");
    const Eigen::VectorXd interference = interference_mean(cir, s, c_ext);
    const Eigen::VectorXd with_signal = interference + cir.desired_signal();
    GaussianMoments g;
    g.mu0 = f.weights.dot(interference);
    g.var0 = f.weights.cwiseProduct(f.weights).dot(interference);
    g.mu1 = f.weights.dot(with_signal);
    g.var1 = f.weights.cwiseProduct(f.weights).dot(with_signal);
    return g;
}

namespace detail {

inline std::vector<GaussianMoments> pattern_moments(const Filter& f, const Cir& cir,
                                                    double c_ext) {
    const int history = cir.memory() - 1;
    if (history > 24)
        throw std::invalid_argument("analytical_ber: l_taps - 1 <= 24 violated (pattern enumeration)");
    std::vector<GaussianMoments> moments;
    moments.reserve(std::size_t{1} << history);
    for (std::uint32_t idx = 0; idx < (1u << history); ++idx)
        moments.push_back(gaussian_moments(f, cir, IsiPattern::from_index(idx, history), c_ext));
    return moments;
}

// Gaussian tail term with the zero-variance limit: a deterministic decision
// variable is misread exactly when the threshold falls on the wrong side.
inline double tail_or_indicator(double xi, double mu, double var) {
    if (var > 0.0) return q_function((xi - mu) / std::sqrt(var));
    return xi <= mu ? 1.0 : 0.0;
}

inline double ber_from_moments(const std::vector<GaussianMoments>& moments, double xi) {
    double total = 0.0;
    for (const GaussianMoments& g : moments)
        total += 0.5 * (1.0 - tail_or_indicator(xi, g.mu1, g.var1) +
                        tail_or_indicator(xi, g.mu0, g.var0));
    return total / static_cast<double>(moments.size());
}

// Argmin of the moment-mixture BER: 4001-point grid over the mean span padded
// by four standard deviations, then golden-section refinement around the best
// grid point. Ties resolve toward the smaller threshold.
inline double minimize_ber_over_threshold(const std::vector<GaussianMoments>& moments) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    double sd0_max = 0.0, sd1_max = 0.0;
    for (const GaussianMoments& g : moments) {
        lo = std::min(lo, g.mu0);
        hi = std::max(hi, g.mu1);
        sd0_max = std::max(sd0_max, std::sqrt(g.var0));
        sd1_max = std::max(sd1_max, std::sqrt(g.var1));
    }
    lo -= 4.0 * sd0_max;
    hi += 4.0 * sd1_max;
    if (!(lo < hi)) return lo;

    constexpr int grid_points = 4001;
    const double step = (hi - lo) / (grid_points - 1);
    int best_index = 0;
    double best_value = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid_points; ++i) {
        const double value = ber_from_moments(moments, lo + i * step);
        if (value < best_value) {
            best_value = value;
            best_index = i;
        }
    }

    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo + std::max(0, best_index - 1) * step;
    double b = lo + std::min(grid_points - 1, best_index + 1) * step;
    double c = b - ratio * (b - a);
    double e = a + ratio * (b - a);
    double fc = ber_from_moments(moments, c);
    double fe = ber_from_moments(moments, e);
    while (b - a > 1e-12 * (hi - lo)) {
        if (fc <= fe) {
            b = e;
            e = c;
            fe = fc;
            c = b - ratio * (b - a);
            fc = ber_from_moments(moments, c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + ratio * (b - a);
            fe = ber_from_moments(moments, e);
        }
    }
    const double refined = 0.5 * (a + b);
    return ber_from_moments(moments, refined) <= best_value ? refined
                                                            : lo + best_index * step;
}

}  // namespace detail

// Pattern-averaged error probability of the threshold detector under the
// Gaussian approximation of the conditional decision variable, with
// equiprobable bits and equiprobable ISI patterns.
inline double analytical_ber(const Filter& f, const Cir& cir, double c_ext, double xi) {
    return detail::ber_from_moments(detail::pattern_moments(f, cir, c_ext), xi);
}

// Threshold minimizing the analytical BER for this filter/channel pair.
inline double optimize_threshold(const Filter& f, const Cir& cir, double c_ext) {
    return detail::minimize_ber_over_threshold(detail::pattern_moments(f, cir, c_ext));
}

}  // namespace mcmf
