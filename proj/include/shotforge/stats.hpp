#pragma once

// Error metrics and the uncertainty objective.
//
// The Student-t functions work in long double: the confidence-interval
// objective only needs double accuracy, but inverting the CDF deep in the
// upper tail (t > 8 at 50 degrees of freedom) loses the information a
// double probability can hold, and the quantile/CDF pair is expected to
// round-trip to 1e-6 over t in [-10, 10].

#include <cstddef>
#include <span>
#include <vector>

namespace shotforge::stats {

/// Sum of |actual - estimate|. Throws LengthMismatch on unequal or empty input.
double sae(std::span<const double> actuals, std::span<const double> estimates);

/// sae / n.
double mae(std::span<const double> actuals, std::span<const double> estimates);

/// Elementwise |actual - estimate|.
std::vector<double> absolute_errors(std::span<const double> actuals,
                                    std::span<const double> estimates);

double mean(std::span<const double> xs);

/// Sample standard deviation with the n-1 denominator. Throws TooFewSamples
/// for fewer than two values.
double sample_std(std::span<const double> xs);

/// Regularized incomplete beta I_x(a, b), with y = 1 - x supplied by the
/// caller so that x close to 1 keeps full precision.
long double incomplete_beta(long double a, long double b, long double x, long double y);

/// P(T <= x) for Student's t with `dof` degrees of freedom.
/// Throws DomainError if dof < 1.
long double t_cdf(long double x, long dof);

/// Smallest x with p <= t_cdf(x, dof), found by bisection to full
/// long-double resolution. Throws DomainError unless 0 < p < 1 and dof >= 1.
long double t_quantile(long double p, long dof);

struct ErrorSample {
    std::vector<double> abs_errors;

    std::size_t n() const noexcept { return abs_errors.size(); }
};

struct CiConfig {
    /// Used directly as the quantile argument (one-sided). Pass 0.975 for a
    /// two-sided 95% interval.
    double p = 0.95;
    /// Number of estimated parameters; dof = n - k.
    long k = 1;
};

/// Validates 0 < p < 1 and k >= 1. Throws DomainError.
void validate(const CiConfig& cfg);

/// t_quantile(p, n - k) * sample_std(abs_errors) / sqrt(n - 1).
/// Throws TooFewSamples when n < 2 and DomainError when n - k < 1.
double confidence_interval(const ErrorSample& sample, const CiConfig& cfg);

}  // namespace shotforge::stats
