#include "shotforge/stats.hpp"

#include <cfloat>
#include <cmath>
#include <limits>
#include <string>

#include "shotforge/errors.hpp"

namespace shotforge::stats {

namespace {

void check_pair(std::span<const double> actuals, std::span<const double> estimates) {
    if (actuals.size() != estimates.size()) {
        throw LengthMismatch("actuals has " + std::to_string(actuals.size()) +
                             " values, estimates has " + std::to_string(estimates.size()));
    }
    if (actuals.empty()) {
        throw LengthMismatch("error metrics need at least one pair");
    }
}

// Continued fraction for I_x(a, b), modified Lentz. Converges quickly for
// x < (a + 1) / (a + b + 2).
long double beta_fraction(long double a, long double b, long double x) {
    constexpr long double tiny = 1e-4000L;
    constexpr long double eps = 4 * LDBL_EPSILON;
    constexpr int max_iter = 100000;

    long double c = 1.0L;
    long double d = 1.0L - (a + b) * x / (a + 1.0L);
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0L / d;
    long double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const long double m2 = 2.0L * m;
        long double num = m * (b - m) * x / ((a + m2 - 1.0L) * (a + m2));
        d = 1.0L + num * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0L + num / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0L / d;
        h *= d * c;

        num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0L));
        d = 1.0L + num * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0L + num / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0L / d;
        const long double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0L) < eps) return h;
    }
    throw DomainError("incomplete beta continued fraction did not converge");
}

}  // namespace

double sae(std::span<const double> actuals, std::span<const double> estimates) {
    check_pair(actuals, estimates);
    double total = 0.0;
    for (std::size_t i = 0; i < actuals.size(); ++i) total += std::abs(actuals[i] - estimates[i]);
    return total;
}

double mae(std::span<const double> actuals, std::span<const double> estimates) {
    return sae(actuals, estimates) / static_cast<double>(actuals.size());
}

std::vector<double> absolute_errors(std::span<const double> actuals,
                                    std::span<const double> estimates) {
    check_pair(actuals, estimates);
    std::vector<double> out(actuals.size());
    for (std::size_t i = 0; i < actuals.size(); ++i) out[i] = std::abs(actuals[i] - estimates[i]);
    return out;
}

double mean(std::span<const double> xs) {
    if (xs.empty()) throw TooFewSamples("mean of an empty sample");
    double total = 0.0;
    for (double x : xs) total += x;
    return total / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
    if (xs.size() < 2) {
        throw TooFewSamples("sample standard deviation needs at least 2 values, got " +
                            std::to_string(xs.size()));
    }
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

long double incomplete_beta(long double a, long double b, long double x, long double y) {
    if (a <= 0 || b <= 0 || x < 0 || x > 1) {
        throw DomainError("incomplete beta outside its domain");
    }
    if (x == 0) return 0.0L;
    if (y == 0) return 1.0L;
    const long double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                  a * std::log(x) + b * std::log(y);
    const long double front = std::exp(log_front);
    if (x < (a + 1.0L) / (a + b + 2.0L)) {
        return front * beta_fraction(a, b, x) / a;
    }
    return 1.0L - front * beta_fraction(b, a, y) / b;
}

long double t_cdf(long double x, long dof) {
    if (dof < 1) {
        throw DomainError("t distribution needs dof >= 1, got " + std::to_string(dof));
    }
    if (std::isnan(x)) throw DomainError("t_cdf of NaN");
    if (x == 0) return 0.5L;
    if (std::isinf(x)) return x > 0 ? 1.0L : 0.0L;
    const long double nu = static_cast<long double>(dof);
    const long double t2 = x * x;
    // P(|T| > |x|) = I_{nu/(nu+t^2)}(nu/2, 1/2)
    const long double upper = 0.5L * incomplete_beta(nu / 2, 0.5L, nu / (nu + t2), t2 / (nu + t2));
    return x > 0 ? 1.0L - upper : upper;
}

long double t_quantile(long double p, long dof) {
    if (!(p > 0 && p < 1)) {
        throw DomainError("t quantile needs 0 < p < 1");
    }
    if (dof < 1) {
        throw DomainError("t distribution needs dof >= 1, got " + std::to_string(dof));
    }
    if (p == 0.5L) return 0.0L;

    // Bracket with t_cdf(lo) < p <= t_cdf(hi).
    long double lo = 0;
    long double hi = 0;
    if (p > 0.5L) {
        hi = 1;
        while (t_cdf(hi, dof) < p) {
            lo = hi;
            hi *= 2;
            if (std::isinf(hi)) throw DomainError("t quantile bracket overflow");
        }
    } else {
        lo = -1;
        while (t_cdf(lo, dof) >= p) {
            hi = lo;
            lo *= 2;
            if (std::isinf(lo)) throw DomainError("t quantile bracket overflow");
        }
    }
    for (int iter = 0; iter < 512; ++iter) {
        const long double mid = lo + (hi - lo) / 2;
        if (mid <= lo || mid >= hi) break;
        if (t_cdf(mid, dof) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return hi;
}

void validate(const CiConfig& cfg) {
    if (!(cfg.p > 0 && cfg.p < 1)) {
        throw DomainError("confidence level p must lie in (0, 1)");
    }
    if (cfg.k < 1) {
        throw DomainError("number of estimated parameters k must be >= 1");
    }
}

double confidence_interval(const ErrorSample& sample, const CiConfig& cfg) {
    validate(cfg);
    const std::size_t n = sample.n();
    if (n < 2) {
        throw TooFewSamples("confidence interval needs at least 2 errors, got " +
                            std::to_string(n));
    }
    const long dof = static_cast<long>(n) - cfg.k;
    if (dof < 1) {
        throw DomainError("dof = n - k = " + std::to_string(dof) + " is below 1");
    }
    const long double q = t_quantile(cfg.p, dof);
    const long double sd = sample_std(sample.abs_errors);
    return static_cast<double>(q * sd / std::sqrt(static_cast<long double>(n - 1)));
}

}  // namespace shotforge::stats
