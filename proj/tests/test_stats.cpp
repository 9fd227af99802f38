#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "shotforge/errors.hpp"
#include "shotforge/stats.hpp"

using namespace shotforge;
using namespace shotforge::stats;

TEST(ErrorMetrics, Sae) {
    EXPECT_DOUBLE_EQ(sae(std::vector<double>{3, 5, 8}, std::vector<double>{3, 5, 8}), 0.0);
    EXPECT_DOUBLE_EQ(sae(std::vector<double>{3, 5, 8}, std::vector<double>{2, 5, 10}), 3.0);
    EXPECT_DOUBLE_EQ(sae(std::vector<double>{2}, std::vector<double>{5}), 3.0);
    EXPECT_THROW(sae(std::vector<double>{1, 2}, std::vector<double>{1}), LengthMismatch);
    EXPECT_THROW(sae(std::vector<double>{}, std::vector<double>{}), LengthMismatch);
}

TEST(ErrorMetrics, Mae) {
    EXPECT_DOUBLE_EQ(mae(std::vector<double>{3, 5, 8}, std::vector<double>{2, 5, 10}), 1.0);
    EXPECT_DOUBLE_EQ(mae(std::vector<double>{4, 4}, std::vector<double>{4, 4}), 0.0);
    EXPECT_DOUBLE_EQ(mae(std::vector<double>{1, 1}, std::vector<double>{2, 4}), 2.0);
}

TEST(ErrorMetrics, SaeZeroExactlyWhenEqual) {
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> u(0, 20);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> a(1 + gen() % 10), e;
        for (auto& v : a) v = u(gen);
        e = a;
        EXPECT_EQ(sae(a, e), 0.0);
        e[gen() % e.size()] += 0.25;
        EXPECT_GT(sae(a, e), 0.0);
    }
}

TEST(SampleStd, Examples) {
    EXPECT_DOUBLE_EQ(sample_std(std::vector<double>{1, 0, 2}), 1.0);
    EXPECT_DOUBLE_EQ(sample_std(std::vector<double>{4, 4, 4}), 0.0);
    EXPECT_NEAR(sample_std(std::vector<double>{0, 2}), std::sqrt(2.0), 1e-15);
    EXPECT_THROW(sample_std(std::vector<double>{1}), TooFewSamples);
}

TEST(SampleStd, TranslationInvariant) {
    std::mt19937 gen(9);
    std::uniform_real_distribution<double> u(0, 10);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> xs(2 + gen() % 30);
        for (auto& v : xs) v = u(gen);
        auto shifted = xs;
        const double c = u(gen) * 10;
        for (auto& v : shifted) v += c;
        EXPECT_NEAR(sample_std(xs), sample_std(shifted), 1e-9);
    }
}

TEST(TCdf, SymmetryAndCentre) {
    for (long d : {1, 2, 5, 30, 200}) {
        EXPECT_EQ(t_cdf(0, d), 0.5L);
        for (long double x : {0.1L, 1.0L, 2.5L, 7.0L}) {
            EXPECT_NEAR(static_cast<double>(t_cdf(-x, d)), static_cast<double>(1 - t_cdf(x, d)), 1e-15);
        }
    }
    EXPECT_THROW(t_cdf(1, 0), DomainError);
}

TEST(TCdf, MatchesIntegrationOracle) {
    for (long d : {1, 2, 3, 5, 9, 29, 50, 100}) {
        for (long double x : {-6.0L, -2.0L, -0.7L, 0.3L, 1.69913L, 3.5L, 9.0L}) {
            EXPECT_NEAR(static_cast<double>(t_cdf(x, d)), static_cast<double>(oracle::t_cdf(x, d)), 1e-10)
                << "x=" << static_cast<double>(x) << " dof=" << d;
        }
    }
    EXPECT_NEAR(static_cast<double>(t_cdf(1.69913L, 29)), 0.95, 1e-4);
}

TEST(TQuantile, MatchesOracleAndTable) {
    // Standard one-sided 95% t-table values.
    const std::vector<std::pair<long, double>> table{
        {1, 6.313752}, {2, 2.919986}, {5, 2.015048}, {9, 1.833113}, {29, 1.699127}, {100, 1.660234}};
    for (const auto& [dof, value] : table) {
        const double q = static_cast<double>(t_quantile(0.95L, dof));
        EXPECT_NEAR(q, value, 1e-4) << "dof=" << dof;
        EXPECT_NEAR(q, static_cast<double>(oracle::t_quantile(0.95L, dof)), 1e-9) << "dof=" << dof;
    }
}

TEST(TQuantile, CentreAndDomain) {
    for (long d : {1, 4, 60}) EXPECT_NEAR(static_cast<double>(t_quantile(0.5L, d)), 0.0, 1e-15);
    EXPECT_THROW(t_quantile(0.0L, 3), DomainError);
    EXPECT_THROW(t_quantile(1.0L, 3), DomainError);
    EXPECT_THROW(t_quantile(0.9L, 0), DomainError);
}

TEST(TQuantile, MonotoneInP) {
    for (long d : {1, 3, 17}) {
        long double prev = t_quantile(0.01L, d);
        for (int i = 2; i < 100; ++i) {
            const long double q = t_quantile(i / 100.0L, d);
            EXPECT_GT(q, prev);
            prev = q;
        }
    }
}

TEST(TQuantile, RoundTripOverGrid) {
    double worst = 0;
    for (long d = 1; d <= 50; ++d) {
        for (int i = 0; i <= 40; ++i) {
            const long double x = -10.0L + i * 0.5L;
            const long double back = t_quantile(t_cdf(x, d), d);
            worst = std::max(worst, static_cast<double>(std::fabs(back - x)));
        }
    }
    EXPECT_LT(worst, 1e-6);
}

TEST(ConfidenceInterval, WorkedExample) {
    // 2.91999 * 1.0 / sqrt(2)
    EXPECT_NEAR(confidence_interval(ErrorSample{{1, 0, 2}}, CiConfig{}), 2.06476, 1e-4);
    EXPECT_EQ(confidence_interval(ErrorSample{{3, 3, 3, 3}}, CiConfig{}), 0.0);
}

TEST(ConfidenceInterval, Preconditions) {
    EXPECT_THROW(confidence_interval(ErrorSample{{1, 2}}, CiConfig{0.95, 2}), DomainError);
    EXPECT_THROW(confidence_interval(ErrorSample{{1}}, CiConfig{}), TooFewSamples);
    EXPECT_THROW(validate(CiConfig{1.0, 1}), DomainError);
    EXPECT_THROW(validate(CiConfig{0.95, 0}), DomainError);
}

TEST(ConfidenceInterval, MatchesOracleComposition) {
    std::mt19937 gen(21);
    std::uniform_real_distribution<double> u(0, 13);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> errs(2 + gen() % 99);
        for (auto& v : errs) v = std::round(u(gen) * 2) / 2;
        const double got = confidence_interval(ErrorSample{errs}, CiConfig{});
        const double want = static_cast<double>(oracle::confidence_interval(errs, 0.95, 1));
        EXPECT_NEAR(got, want, 1e-9 * std::max(1.0, want));
    }
}

TEST(ConfidenceInterval, ScalesLinearly) {
    std::mt19937 gen(8);
    std::uniform_real_distribution<double> u(0, 5);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> errs(2 + gen() % 40);
        for (auto& v : errs) v = u(gen);
        const double c = 0.1 + u(gen);
        auto scaled = errs;
        for (auto& v : scaled) v *= c;
        const double base = confidence_interval(ErrorSample{errs}, CiConfig{});
        EXPECT_NEAR(confidence_interval(ErrorSample{scaled}, CiConfig{}), c * base, 1e-9 * (1 + c * base));
    }
}
