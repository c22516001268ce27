#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mcmf/stats.hpp"

using Catch::Approx;
using namespace mcmf;

namespace {

Cir make_cir(std::initializer_list<std::initializer_list<double>> rows) {
    const int l = static_cast<int>(rows.size());
    const int m = static_cast<int>(rows.begin()->size());
    Eigen::MatrixXd taps(l, m);
    int i = 0;
    for (const auto& row : rows) {
        int j = 0;
        for (double v : row) taps(i, j++) = v;
        ++i;
    }
    return Cir{std::move(taps)};
}

double poisson_cdf(double lambda, long long x) {
    double cdf = 0.0;
    for (long long j = 0; j <= x; ++j)
        cdf += std::exp(j * std::log(lambda) - lambda - std::lgamma(double(j) + 1.0));
    return cdf;
}

}  // namespace

TEST_CASE("poisson sampler input contract") {
    RandomStream rng(1);
    CHECK_THROWS_AS(sample_poisson(-1.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_poisson(std::nan(""), rng), std::invalid_argument);
    for (int i = 0; i < 100; ++i) CHECK(sample_poisson(0.0, rng) == 0);
}

TEST_CASE("poisson sampler moments at lambda = 5") {
    RandomStream rng(42);
    const int n = 1000000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = static_cast<double>(sample_poisson(5.0, rng));
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean - 5.0) < 0.01);
    CHECK(std::abs(var - 5.0) < 0.05);
}

TEST_CASE("poisson sampler zero-count mass at lambda = 2") {
    RandomStream rng(7);
    const int n = 1000000;
    int zeros = 0;
    for (int i = 0; i < n; ++i) zeros += sample_poisson(2.0, rng) == 0;
    CHECK(std::abs(zeros / double(n) - std::exp(-2.0)) < 0.002);
}

TEST_CASE("large-mean sampler path follows the exact distribution") {
    // lambda = 50 exercises the rejection sampler; compare the empirical CDF
    // at a handful of points against exact Poisson sums.
    RandomStream rng(11);
    const int n = 400000;
    std::vector<long long> draws(n);
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        draws[i] = sample_poisson(50.0, rng);
        sum += double(draws[i]);
        sumsq += double(draws[i]) * double(draws[i]);
    }
    const double mean = sum / n;
    CHECK(std::abs(mean - 50.0) < 0.05);
    CHECK(std::abs((sumsq / n - mean * mean) - 50.0) < 0.5);
    for (long long x : {35LL, 45LL, 50LL, 55LL, 65LL}) {
        const double exact = poisson_cdf(50.0, x);
        double empirical = 0.0;
        for (long long v : draws) empirical += v <= x;
        empirical /= n;
        const double se = std::sqrt(exact * (1.0 - exact) / n);
        CHECK(std::abs(empirical - exact) <= 4.0 * se + 1e-12);
    }
}

TEST_CASE("random streams replay exactly and separate by index") {
    RandomStream a(123, 5), b(123, 5), c(123, 6);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 1000; ++i) {
        const auto va = a.next_u64();
        all_equal = all_equal && va == b.next_u64();
        any_diff = any_diff || va != c.next_u64();
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("shifted poisson pmf values and contract") {
    CHECK(shifted_poisson_pmf(1.0, -1.0) == Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(shifted_poisson_pmf(0.0, 0.0) == 1.0);
    CHECK(shifted_poisson_pmf(0.0, 1.0) == 0.0);
    CHECK(shifted_poisson_pmf(1.0, 0.3) == 0.0);  // off the support lattice
    CHECK(shifted_poisson_pmf(2.5, -0.5) > 0.0);  // support is {j - lambda}
    CHECK_THROWS_AS(shifted_poisson_pmf(-1.0, 0.0), std::invalid_argument);
}

TEST_CASE("shifted poisson pmf is a zero-mean unit-variance law at lambda = 1") {
    double sum = 0.0, mean = 0.0, var = 0.0;
    for (int j = 0; j <= 60; ++j) {
        const double x = j - 1.0;
        const double p = shifted_poisson_pmf(1.0, x);
        sum += p;
        mean += x * p;
        var += x * x * p;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(var - 1.0) < 1e-6);
}

TEST_CASE("q function") {
    CHECK(q_function(0.0) == 0.5);
    CHECK(q_function(1.0) == Approx(0.15865525393145707).epsilon(1e-12));
    CHECK(q_function(-2.5) == Approx(1.0 - q_function(2.5)).epsilon(1e-13));
    CHECK(q_function(8.0) < 1e-14);
    CHECK(q_function(8.0) > 0.0);
}

TEST_CASE("interference mean composes the active past taps") {
    const Cir cir = make_cir({{9.0, 9.0}, {2.0, 4.0}});
    const Eigen::VectorXd quiet = interference_mean(cir, IsiPattern{{0}}, 1.0);
    CHECK(quiet(0) == 1.0);
    CHECK(quiet(1) == 1.0);
    const Eigen::VectorXd active = interference_mean(cir, IsiPattern{{1}}, 1.0);
    CHECK(active(0) == 3.0);
    CHECK(active(1) == 5.0);

    const Cir memoryless = make_cir({{4.0, 2.0, 7.0}});
    const Eigen::VectorXd ext = interference_mean(memoryless, IsiPattern{}, 2.0);
    for (int m = 0; m < 3; ++m) CHECK(ext(m) == 2.0);

    CHECK_THROWS_AS(interference_mean(cir, IsiPattern{{1, 0}}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(interference_mean(cir, IsiPattern{{2}}, 1.0), std::invalid_argument);
}

TEST_CASE("interference covariance: memoryless channel is exactly diagonal") {
    const Cir cir = make_cir({{1.0, 2.0, 3.0, 4.0, 5.0, 6.0}});
    const InterferenceCov cov = interference_covariance(cir, 2.0);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) CHECK(cov.mat(i, j) == (i == j ? 2.0 : 0.0));
}

TEST_CASE("interference covariance: two-pattern enumeration by hand") {
    const Cir cir = make_cir({{9.0, 9.0}, {2.0, 4.0}});
    const InterferenceCov cov = interference_covariance(cir, 1.0);
    // conditional means are {1,3} and {1,5}; pattern spread plus Poisson part
    CHECK(cov.mat(0, 0) == 3.0);
    CHECK(cov.mat(1, 1) == 7.0);
    CHECK(cov.mat(0, 1) == 2.0);
    CHECK(cov.mat(1, 0) == 2.0);
}

TEST_CASE("interference covariance rejects unenumerable memories") {
    Eigen::MatrixXd taps = Eigen::MatrixXd::Constant(26, 1, 0.5);
    CHECK_THROWS_AS(interference_covariance(Cir{taps}, 1.0), std::invalid_argument);
}

TEST_CASE("interference covariance is symmetric positive semidefinite") {
    RandomStream rng(99);
    for (int rep = 0; rep < 30; ++rep) {
        const int m = 1 + static_cast<int>(rng.next_u64() % 6);
        const int l = 1 + static_cast<int>(rng.next_u64() % 3);
        Eigen::MatrixXd taps(l, m);
        for (int i = 0; i < l; ++i)
            for (int j = 0; j < m; ++j) taps(i, j) = 8.0 * rng.next_unit();
        const double c_ext = 5.0 * rng.next_unit();
        const InterferenceCov cov = interference_covariance(Cir{taps}, c_ext);
        CHECK((cov.mat - cov.mat.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov.mat);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-9 * cov.mat.trace() - 1e-15);
    }
}

TEST_CASE("interference covariance matches simulated interference vectors") {
    // light version of the Monte Carlo cross-check (the acceptance suite runs
    // the full 10^6-sample version over 20 instances)
    RandomStream rng(2024);
    for (int rep = 0; rep < 3; ++rep) {
        const int m = 2 + static_cast<int>(rng.next_u64() % 3);
        const int l = 2 + static_cast<int>(rng.next_u64() % 2);
        Eigen::MatrixXd taps(l, m);
        for (int i = 0; i < l; ++i)
            for (int j = 0; j < m; ++j) taps(i, j) = 0.3 + 6.0 * rng.next_unit();
        const Cir cir{taps};
        const double c_ext = 0.5 + 4.0 * rng.next_unit();
        const InterferenceCov expected = interference_covariance(cir, c_ext);

        const int history = l - 1;
        const int batches = 20, per_batch = 10000;
        std::vector<Eigen::MatrixXd> batch_cov;
        Eigen::VectorXd counts(m);
        for (int bi = 0; bi < batches; ++bi) {
            Eigen::VectorXd sum = Eigen::VectorXd::Zero(m);
            Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(m, m);
            for (int k = 0; k < per_batch; ++k) {
                IsiPattern s;
                s.bits.resize(history);
                for (int j = 0; j < history; ++j) s.bits[j] = rng.next_bit();
                const Eigen::VectorXd mean = interference_mean(cir, s, c_ext);
                for (int j = 0; j < m; ++j)
                    counts(j) = static_cast<double>(sample_poisson(mean(j), rng));
                sum += counts;
                outer += counts * counts.transpose();
            }
            batch_cov.push_back((outer - sum * sum.transpose() / per_batch) / (per_batch - 1));
        }
        Eigen::MatrixXd mean_cov = Eigen::MatrixXd::Zero(m, m);
        for (const auto& c : batch_cov) mean_cov += c;
        mean_cov /= batches;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                double ss = 0.0;
                for (const auto& c : batch_cov)
                    ss += (c(i, j) - mean_cov(i, j)) * (c(i, j) - mean_cov(i, j));
                const double se = std::sqrt(ss / (batches - 1) / batches);
                CHECK(std::abs(mean_cov(i, j) - expected.mat(i, j)) <= 4.5 * se + 1e-9);
            }
    }
}
