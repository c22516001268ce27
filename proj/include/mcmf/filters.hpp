#pragma once

// Linear per-symbol filters: the SINR-optimal matched filter, three benchmark
// detectors, SINR evaluation, and an independent eigen-decomposition oracle
// that re-derives the optimum through the generalized Rayleigh quotient.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "mcmf/channel.hpp"
#include "mcmf/stats.hpp"

namespace mcmf {

enum class FilterKind { matched, sum, correlator, peak, custom };

inline const char* to_string(FilterKind k) {
    switch (k) {
        case FilterKind::matched: return "matched";
        case FilterKind::sum: return "sum";
        case FilterKind::correlator: return "correlator";
        case FilterKind::peak: return "peak";
        default: return "custom";
    }
}

struct Filter {
    Eigen::VectorXd weights;
    FilterKind kind = FilterKind::custom;

    Filter() = default;
    Filter(Eigen::VectorXd w, FilterKind k) : weights(std::move(w)), kind(k) {
        if (weights.size() < 1) throw std::invalid_argument("filter: at least one weight required");
        if (!weights.allFinite()) throw std::invalid_argument("filter: weights must be finite");
        if (weights.isZero(0.0)) throw std::invalid_argument("filter: all-zero weight vector");
    }
};

namespace detail {

// Denominator matrix of the SINR quadratic form: half the signal's own
// Poisson variance plus the interference covariance.
inline Eigen::MatrixXd system_matrix(const Cir& cir, const InterferenceCov& cov) {
    if (cov.mat.rows() != cir.samples() || cov.mat.cols() != cir.samples())
        throw std::invalid_argument("filters: covariance dimension must match sample count");
    Eigen::MatrixXd b = cov.mat;
    b.diagonal() += 0.5 * cir.desired_signal();
    return b;
}

}  // namespace detail

// Weight vector maximizing the output SINR: the solution of B f = signal with
// B the system matrix above, obtained by a Cholesky solve (B is symmetric
// positive definite whenever any noise source is present).
inline Filter matched_filter(const Cir& cir, const InterferenceCov& cov) {
    const Eigen::VectorXd signal = cir.desired_signal();
    if (signal.isZero(0.0))
        throw std::invalid_argument("matched_filter: desired-signal vector is all zero");
    const Eigen::MatrixXd b = detail::system_matrix(cir, cov);
    Eigen::LLT<Eigen::MatrixXd> llt(b);
    if (llt.info() != Eigen::Success)
        throw std::domain_error("matched_filter: system matrix is not positive definite");
    return Filter(llt.solve(signal), FilterKind::matched);
}

inline Filter sum_filter(int m_samples) {
    if (m_samples < 1) throw std::invalid_argument("sum_filter: m_samples >= 1 violated");
    return Filter(Eigen::VectorXd::Ones(m_samples), FilterKind::sum);
}

inline Filter correlator_filter(const Cir& cir) {
    Eigen::VectorXd signal = cir.desired_signal();
    if (signal.isZero(0.0))
        throw std::invalid_argument("correlator_filter: desired-signal vector is all zero");
    return Filter(std::move(signal), FilterKind::correlator);
}

// Single-sample detector at the largest expected signal count (the sample
// aligned with the concentration peak); ties resolve to the lowest index.
inline Filter peak_filter(const Cir& cir) {
    const Eigen::VectorXd signal = cir.desired_signal();
    Eigen::Index best = 0;
    signal.maxCoeff(&best);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(signal.size());
    w(best) = 1.0;
    return Filter(std::move(w), FilterKind::peak);
}

// Output SINR of an arbitrary filter: half the squared expected signal swing
// over the total noise-plus-interference variance at the filter output.
inline double sinr(const Filter& f, const Cir& cir, const InterferenceCov& cov) {
    if (f.weights.size() != cir.samples())
        throw std::invalid_argument("sinr: filter length must match sample count");
    const Eigen::MatrixXd b = detail::system_matrix(cir, cov);
    const double denom = f.weights.dot(b * f.weights);
    if (!(denom > 0.0)) throw std::domain_error("sinr: zero noise denominator");
    const double num = f.weights.dot(cir.desired_signal());
    return 0.5 * num * num / denom;
}

// Closed-form maximum SINR, 0.5 * signal' B^{-1} signal. Must agree with
// sinr(matched_filter(...)) to machine-level relative error.
inline double optimal_sinr(const Cir& cir, const InterferenceCov& cov) {
    const Eigen::VectorXd signal = cir.desired_signal();
    const Eigen::MatrixXd b = detail::system_matrix(cir, cov);
    Eigen::LLT<Eigen::MatrixXd> llt(b);
    if (llt.info() != Eigen::Success)
        throw std::domain_error("optimal_sinr: system matrix is not positive definite");
    return 0.5 * signal.dot(llt.solve(signal));
}

// Independent verification route for the matched filter: form the rank-one
// matrix D = B^{-1} signal signal' explicitly (LU inverse, deliberately not
// the Cholesky path above), extract its dominant eigenpair by power iteration,
// and return (eigenvector, 0.5 * eigenvalue). The eigenvalue halved equals the
// optimal SINR and the eigenvector is collinear with the matched filter.
inline std::pair<Filter, double> rayleigh_quotient_oracle(const Cir& cir,
                                                          const InterferenceCov& cov) {
    const Eigen::VectorXd signal = cir.desired_signal();
    if (signal.isZero(0.0))
        throw std::invalid_argument("rayleigh_quotient_oracle: desired-signal vector is all zero");
    const Eigen::MatrixXd b = detail::system_matrix(cir, cov);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(b);
    if (!lu.isInvertible())
        throw std::domain_error("rayleigh_quotient_oracle: system matrix is singular");
    const Eigen::MatrixXd d = lu.inverse() * (signal * signal.transpose());

    const int m = static_cast<int>(signal.size());
    Eigen::VectorXd v = Eigen::VectorXd::Ones(m).normalized();
    double eigenvalue = 0.0;
    bool converged = false;
    std::uint64_t restart_state = 0x52514f5241434c45ULL;  // fixed restart sequence
    for (int iter = 0; iter < 10000; ++iter) {
        Eigen::VectorXd w = d * v;
        const double norm = w.norm();
        if (!(norm > 1e-300)) {
            // Stagnated (start vector in the null space); deterministic restart.
            for (int i = 0; i < m; ++i)
                v(i) = static_cast<double>(detail::mix64(restart_state += i + 1)) * 0x1.0p-64 - 0.5;
            v.normalize();
            continue;
        }
        w /= norm;
        const double candidate = w.dot(d * w);
        const double residual = (d * w - candidate * w).norm();
        v = w;
        if (residual <= 1e-12 * std::max(1.0, std::abs(candidate)) &&
            std::abs(candidate - eigenvalue) <= 1e-12 * std::max(1.0, std::abs(candidate))) {
            eigenvalue = candidate;
            converged = true;
            break;
        }
        eigenvalue = candidate;
    }
    if (!converged)
        throw std::runtime_error("rayleigh_quotient_oracle: power iteration did not converge");
    if (v.dot(signal) < 0.0) v = -v;  // orient like the matched filter
    return {Filter(std::move(v), FilterKind::custom), 0.5 * eigenvalue};
}

}  // namespace mcmf
