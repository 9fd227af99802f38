#pragma once

// Markdown/CSV rendering of run results in the layout of a results table
// with one row per project: the zero-shot, best-SAE and best-CI Pareto
// members (MAE with N and CI in parentheses) next to the baselines.

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shotforge/pipeline.hpp"

namespace shotforge::report {

struct MemberCell {
    double mae = 0.0;
    double ci = 0.0;
    std::size_t n = 0;
};

struct ResultsRow {
    std::string project;
    std::optional<MemberCell> zero_shot;  ///< absent when the front has no N = 0 member
    MemberCell best_sae;
    MemberCell best_ci;
    double mean = 0.0;
    double median = 0.0;
    double random = 0.0;
    /// Separately evaluated zero-shot MAE, used for the improvement figure
    /// when the front holds no zero-shot member.
    std::optional<double> zero_shot_reference_mae;

    /// MAE the improvement is measured against, if any.
    std::optional<double> zero_shot_mae() const;
};

/// Rows from a JSON fixture {"rows": [{"project", "zero_shot": {"mae","ci"},
/// "best_sae": {"mae","n","ci"}, "best_ci": {...}, "baselines": {"mean",
/// "median","random"}}]}. Throws ParseError.
std::vector<ResultsRow> rows_from_fixture(const nlohmann::json& j);

/// Row for a completed run's pareto.json.
ResultsRow row_from_pareto(const nlohmann::json& pareto);

/// Markdown table. In every row the lowest MAE is bold, as is the lowest CI
/// among the three Pareto members.
std::string render_results_table(const std::vector<ResultsRow>& rows);

/// Mean improvement of best-SAE over zero-shot MAE across rows that have a
/// zero-shot figure; nullopt if none do.
std::optional<double> average_improvement(const std::vector<ResultsRow>& rows);

std::string format_fixed(double value, int decimals = 2);

/// report.md for one run.
std::string render_run_report(const Dataset& dataset, const pipeline::RunSettings& settings,
                              const pipeline::RunResult& result);

/// front_points.csv: sae,ci,n_shots,chromosome (genes joined by ';').
std::string render_front_points(const std::vector<pipeline::EvaluatedIndividual>& front);

std::string render_history(const std::vector<pipeline::HistoryRow>& history);

}  // namespace shotforge::report
