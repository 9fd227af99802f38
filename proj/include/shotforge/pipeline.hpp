#pragma once

// Fitness orchestration and run lifecycle.
//
// A chromosome is scored by estimating every issue of the effective test
// set with the selected train issues as shots, then reducing the errors to
// (SAE, CI, N). A run drives the NSGA-II loop over that fitness, writes an
// atomic checkpoint after every generation and leaves its artifacts in a run
// directory:
//
//   config.snapshot.json  state.ckpt  cache.jsonl  pareto.json
//   history.csv  report.md  front_points.csv

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shotforge/baselines.hpp"
#include "shotforge/domain.hpp"
#include "shotforge/estimator.hpp"
#include "shotforge/evolve.hpp"
#include "shotforge/stats.hpp"

namespace shotforge::pipeline {

struct IssueEstimate {
    std::string key;
    double actual = 0.0;
    double estimate = 0.0;
    bool fallback = false;

    bool operator==(const IssueEstimate&) const = default;
};

struct EvaluatedIndividual {
    Chromosome chromosome;
    evolve::ObjectiveVector objectives;
    std::vector<IssueEstimate> estimates;
    std::size_t generation = 0;

    double mae() const;
    std::size_t fallback_count() const;

    nlohmann::json to_json() const;
    static EvaluatedIndividual from_json(const nlohmann::json& j);
    bool operator==(const EvaluatedIndividual&) const = default;
};

/// Scores chromosomes against one dataset. Per-issue estimates run on up to
/// `parallelism` workers; results are gathered by index before any objective
/// is computed, so the outcome does not depend on scheduling.
class FitnessContext {
public:
    FitnessContext(const Dataset& dataset, Estimator& estimator, stats::CiConfig ci,
                   std::size_t parallelism = 1);

    /// Throws ValidationError for invalid chromosomes; BackendError propagates
    /// when the estimator has fallback disabled.
    EvaluatedIndividual evaluate(const Chromosome& c, std::size_t generation = 0) const;

    const std::vector<Issue>& train() const noexcept { return train_; }
    const std::vector<Issue>& test() const noexcept { return test_; }
    const AllowedValues& allowed() const noexcept { return allowed_; }
    const stats::CiConfig& ci() const noexcept { return ci_; }

private:
    std::vector<Issue> train_;
    std::vector<Issue> test_;
    AllowedValues allowed_;
    Estimator& estimator_;
    stats::CiConfig ci_;
    std::size_t parallelism_;
};

EvaluatedIndividual evaluate_individual(const Chromosome& c, const Dataset& dataset,
                                        Estimator& estimator, const stats::CiConfig& ci,
                                        std::size_t parallelism = 1);

/// Recomputes (SAE, CI, N) from the stored per-issue estimates.
evolve::ObjectiveVector recompute_objectives(const EvaluatedIndividual& ind,
                                             const stats::CiConfig& ci);

/// Indices into a front of the member minimising each objective. Ties go to
/// fewer shots, then lower SAE, then the earlier member.
struct Representatives {
    std::optional<std::size_t> zero_shot;
    std::size_t best_sae = 0;
    std::size_t best_ci = 0;
    std::size_t min_n = 0;
};

/// Throws EmptyInput on an empty front.
Representatives select_representatives(std::span<const EvaluatedIndividual> front);

/// Mean over projects of 100 (zero - best) / zero. Throws LengthMismatch on
/// unequal or empty input and DomainError when a zero-shot MAE is not positive.
double improvement_report(std::span<const double> zero_shot_mae, std::span<const double> best_mae);

struct HistoryRow {
    std::size_t generation = 0;
    std::size_t front_size = 0;
    double sae_best = 0, sae_median = 0;
    double ci_best = 0, ci_median = 0;
    double n_best = 0, n_median = 0;

    bool operator==(const HistoryRow&) const = default;
};

HistoryRow summarize_generation(std::size_t generation,
                                std::span<const evolve::RankedIndividual> population);

struct RunSettings {
    evolve::EvolutionConfig evolution;
    stats::CiConfig ci;
    std::size_t parallelism = 4;
    /// Report the non-dominated archive of every evaluated individual instead
    /// of the final population's first front.
    bool archive = false;
    /// Stop cleanly after checkpointing this many generations.
    std::optional<std::size_t> halt_after;
    baselines::RandomGuessMode random_guess = baselines::RandomGuessMode::expectation();
};

/// Fixed file names inside a run directory.
struct RunPaths {
    std::filesystem::path dir;

    std::filesystem::path config_snapshot() const { return dir / "config.snapshot.json"; }
    std::filesystem::path state() const { return dir / "state.ckpt"; }
    std::filesystem::path cache() const { return dir / "cache.jsonl"; }
    std::filesystem::path pareto() const { return dir / "pareto.json"; }
    std::filesystem::path history() const { return dir / "history.csv"; }
    std::filesystem::path report() const { return dir / "report.md"; }
    std::filesystem::path front_points() const { return dir / "front_points.csv"; }
};

/// Serializable state at a generation boundary.
struct RunState {
    std::uint64_t seed = 0;
    std::size_t generation = 0;
    std::vector<evolve::RankedIndividual> population;
    std::vector<EvaluatedIndividual> evaluated;  ///< records for population and archive
    std::vector<EvaluatedIndividual> archive;
    std::vector<HistoryRow> history;
    std::size_t estimates = 0;
    std::size_t fallback_estimates = 0;

    nlohmann::json to_json() const;
    static RunState from_json(const nlohmann::json& j);
    bool operator==(const RunState&) const = default;
};

void save_state(const RunState& state, const std::filesystem::path& path);
RunState load_state(const std::filesystem::path& path);

struct RunResult {
    bool completed = false;
    std::size_t generation = 0;
    std::vector<EvaluatedIndividual> front;
    Representatives representatives;
    EvaluatedIndividual zero_shot_reference;
    baselines::BaselineReport baselines;
    std::vector<HistoryRow> history;
    std::size_t estimates = 0;
    std::size_t fallback_estimates = 0;
    /// Backend calls and cache hits made in this process.
    std::size_t backend_calls = 0;
    std::size_t cache_hits = 0;
};

/// Runs (or, with `resume`, continues from state.ckpt) the optimisation and
/// writes the run artifacts on completion. Backend failures propagate after
/// the last completed generation has been checkpointed.
RunResult run_optimization(const Dataset& dataset, Estimator& estimator,
                           const RunSettings& settings, const RunPaths& paths, bool resume);

nlohmann::json pareto_json(const Dataset& dataset, const RunSettings& settings,
                           const RunResult& result);

/// Writes `content` to a sibling temp file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace shotforge::pipeline
