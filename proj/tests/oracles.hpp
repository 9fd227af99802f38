#pragma once

// Reference implementations used only by the tests. They share no code with
// the library and favour obviousness over speed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <vector>

namespace oracle {

/// Student-t density.
inline long double t_pdf(long double x, long dof) {
    const long double v = static_cast<long double>(dof);
    const long double log_norm =
        std::lgamma((v + 1) / 2) - std::lgamma(v / 2) - 0.5L * std::log(v * 3.14159265358979323846264338327950288L);
    return std::exp(log_norm - (v + 1) / 2 * std::log1p(x * x / v));
}

/// P(T <= x) by composite Simpson integration of the density over [0, |x|].
inline long double t_cdf(long double x, long dof, int intervals = 8000) {
    const long double a = std::fabs(x);
    if (a == 0) return 0.5L;
    const long double h = a / intervals;
    long double sum = t_pdf(0, dof) + t_pdf(a, dof);
    for (int i = 1; i < intervals; ++i) {
        sum += (i % 2 == 1 ? 4 : 2) * t_pdf(i * h, dof);
    }
    const long double half = sum * h / 3;
    return x > 0 ? 0.5L + half : 0.5L - half;
}

/// Newton iteration on the integrated CDF, started from the normal quantile.
inline long double t_quantile(long double p, long dof) {
    long double x = 1.6448536269514722L;  // standard normal 0.95 point
    if (p < 0.5L) x = -x;
    for (int it = 0; it < 100; ++it) {
        const long double step = (t_cdf(x, dof) - p) / t_pdf(x, dof);
        // Damp large steps in heavy tails.
        x -= std::clamp(step, -2.0L, 2.0L);
        if (std::fabs(step) < 1e-15L * std::max(1.0L, std::fabs(x))) break;
    }
    return x;
}

/// Memoised quantiles, since the oracle is slow.
inline long double t_quantile_cached(long double p, long dof) {
    static std::map<std::pair<long double, long>, long double> memo;
    const auto key = std::make_pair(p, dof);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    return memo[key] = t_quantile(p, dof);
}

/// Two-pass sample standard deviation (n - 1 denominator).
inline long double sample_std(const std::vector<double>& xs) {
    long double mean = 0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    long double ss = 0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / (xs.size() - 1));
}

/// quantile(p, n - k) * std / sqrt(n - 1), spelled out term by term.
inline long double confidence_interval(const std::vector<double>& abs_errors, double p, long k) {
    const long n = static_cast<long>(abs_errors.size());
    return t_quantile_cached(p, n - k) * sample_std(abs_errors) / std::sqrt(static_cast<long double>(n - 1));
}

/// Pareto ranks by repeatedly peeling off the members no remaining member
/// dominates. O(n^2) per layer.
inline std::vector<std::size_t> peel_ranks(const std::vector<std::vector<double>>& pts) {
    auto dom = [](const std::vector<double>& u, const std::vector<double>& v) {
        bool strictly = false;
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (u[i] > v[i]) return false;
            if (u[i] < v[i]) strictly = true;
        }
        return strictly;
    };
    const std::size_t n = pts.size();
    std::vector<std::size_t> rank(n, n);
    std::size_t assigned = 0;
    for (std::size_t layer = 0; assigned < n; ++layer) {
        std::vector<std::size_t> current;
        for (std::size_t i = 0; i < n; ++i) {
            if (rank[i] != n) continue;
            bool dominated = false;
            for (std::size_t j = 0; j < n && !dominated; ++j) {
                if (j != i && rank[j] == n && dom(pts[j], pts[i])) dominated = true;
            }
            if (!dominated) current.push_back(i);
        }
        for (auto i : current) rank[i] = layer;
        assigned += current.size();
    }
    return rank;
}

}  // namespace oracle
