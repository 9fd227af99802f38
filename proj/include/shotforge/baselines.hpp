#pragma once

// Reference predictors scored by MAE on the effective test set.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shotforge/domain.hpp"

namespace shotforge::baselines {

enum class BaselineKind { mean, median, random_guess };

std::string to_string(BaselineKind kind);
BaselineKind baseline_kind_from_string(const std::string& name);

struct BaselineResult {
    BaselineKind name = BaselineKind::mean;
    double mae = 0.0;
    /// Per-issue predictions for the constant predictors; empty for random
    /// guessing.
    std::vector<double> predictions;
    /// Sampled random guessing only: number of replications and the standard
    /// error of the mean MAE across them.
    std::optional<std::size_t> draws;
    std::optional<double> standard_error;

    bool operator==(const BaselineResult&) const = default;
};

/// Predicts mean(train_sps) for every test issue. Throws EmptyInput.
BaselineResult mean_baseline(std::span<const double> train_sps, std::span<const Issue> test);

/// Predicts the sample median of train_sps. Throws EmptyInput.
BaselineResult median_baseline(std::span<const double> train_sps, std::span<const Issue> test);

struct RandomGuessMode {
    bool exact = true;
    std::uint64_t seed = 0;
    std::size_t draws = 1000;

    static RandomGuessMode expectation() { return {}; }
    static RandomGuessMode sampled(std::uint64_t seed, std::size_t draws) {
        return {false, seed, draws};
    }
};

/// Each test issue is predicted by a uniformly drawn training actual. Exact
/// mode returns the expectation (1 / (|test| |train|)) sum_i sum_j |a_i - t_j|;
/// sampled mode averages the MAE of `draws` seeded replications.
BaselineResult random_guess_baseline(std::span<const double> train_sps,
                                     std::span<const Issue> test,
                                     RandomGuessMode mode = RandomGuessMode::expectation());

struct BaselineReport {
    std::string project;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::vector<BaselineResult> results;

    const BaselineResult* find(BaselineKind kind) const;

    nlohmann::json to_json() const;
    static BaselineReport from_json(const nlohmann::json& j);
    bool operator==(const BaselineReport&) const = default;
};

/// All three baselines over the dataset's train split and effective test set.
BaselineReport run_baselines(const Dataset& d,
                             RandomGuessMode mode = RandomGuessMode::expectation());

std::vector<double> story_points(std::span<const Issue> issues);

}  // namespace shotforge::baselines
