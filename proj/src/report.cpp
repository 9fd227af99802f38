#include "shotforge/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "shotforge/errors.hpp"

namespace shotforge::report {

namespace {

std::string shortest(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return ec == std::errc{} ? std::string(buf, ptr) : std::to_string(value);
}

std::string bold_if(const std::string& text, bool bold) {
    return bold ? "**" + text + "**" : text;
}

MemberCell cell_from_json(const nlohmann::json& j, bool with_n) {
    MemberCell c;
    c.mae = j.at("mae").get<double>();
    c.ci = j.at("ci").get<double>();
    if (with_n) c.n = j.at("n").get<std::size_t>();
    return c;
}

MemberCell cell_from_member(const nlohmann::json& m) {
    MemberCell c;
    c.mae = m.at("mae").get<double>();
    c.ci = m.at("ci").get<double>();
    c.n = m.at("n_shots").get<std::size_t>();
    return c;
}

bool same(double a, double b) {
    return format_fixed(a) == format_fixed(b);
}

}  // namespace

std::string format_fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    return buf;
}

std::optional<double> ResultsRow::zero_shot_mae() const {
    if (zero_shot) return zero_shot->mae;
    return zero_shot_reference_mae;
}

std::vector<ResultsRow> rows_from_fixture(const nlohmann::json& j) {
    std::vector<ResultsRow> rows;
    try {
        for (const auto& r : j.at("rows")) {
            ResultsRow row;
            row.project = r.at("project").get<std::string>();
            if (r.contains("zero_shot") && !r["zero_shot"].is_null()) {
                row.zero_shot = cell_from_json(r["zero_shot"], false);
            }
            row.best_sae = cell_from_json(r.at("best_sae"), true);
            row.best_ci = cell_from_json(r.at("best_ci"), true);
            const auto& b = r.at("baselines");
            row.mean = b.at("mean").get<double>();
            row.median = b.at("median").get<double>();
            row.random = b.at("random").get<double>();
            rows.push_back(std::move(row));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("table fixture: ") + e.what());
    }
    return rows;
}

ResultsRow row_from_pareto(const nlohmann::json& pareto) {
    try {
        ResultsRow row;
        row.project = pareto.at("project").get<std::string>();
        const auto& front = pareto.at("front");
        const auto& reps = pareto.at("representatives");
        if (!reps.at("zero_shot").is_null()) {
            row.zero_shot = cell_from_member(front.at(reps["zero_shot"].get<std::size_t>()));
        }
        row.best_sae = cell_from_member(front.at(reps.at("best_sae").get<std::size_t>()));
        row.best_ci = cell_from_member(front.at(reps.at("best_ci").get<std::size_t>()));
        row.zero_shot_reference_mae = pareto.at("zero_shot_reference").at("mae").get<double>();
        const auto report = baselines::BaselineReport::from_json(pareto.at("baselines"));
        auto mae_of = [&](baselines::BaselineKind kind) {
            const auto* r = report.find(kind);
            if (r == nullptr) throw ParseError("pareto.json lacks baseline " + baselines::to_string(kind));
            return r->mae;
        };
        row.mean = mae_of(baselines::BaselineKind::mean);
        row.median = mae_of(baselines::BaselineKind::median);
        row.random = mae_of(baselines::BaselineKind::random_guess);
        return row;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("pareto.json: ") + e.what());
    }
}

std::string render_results_table(const std::vector<ResultsRow>& rows) {
    std::ostringstream out;
    out << "| Project | Zero-shot (N=0) | Best SAE | Best CI | Mean | Median | Random |\n";
    out << "|---|---|---|---|---|---|---|\n";
    for (const auto& row : rows) {
        double best_mae = std::min({row.best_sae.mae, row.best_ci.mae, row.mean, row.median, row.random});
        double best_ci = std::min(row.best_sae.ci, row.best_ci.ci);
        if (row.zero_shot) {
            best_mae = std::min(best_mae, row.zero_shot->mae);
            best_ci = std::min(best_ci, row.zero_shot->ci);
        }
        auto mae = [&](double v) { return bold_if(format_fixed(v), same(v, best_mae)); };
        auto ci = [&](double v) { return "CI=" + bold_if(format_fixed(v), same(v, best_ci)); };
        auto member = [&](const MemberCell& c) {
            return mae(c.mae) + " (N=" + std::to_string(c.n) + ", " + ci(c.ci) + ")";
        };
        out << "| " << row.project << " | "
            << (row.zero_shot ? mae(row.zero_shot->mae) + " (" + ci(row.zero_shot->ci) + ")"
                              : std::string("absent"))
            << " | " << member(row.best_sae) << " | " << member(row.best_ci) << " | "
            << mae(row.mean) << " | " << mae(row.median) << " | " << mae(row.random) << " |\n";
    }
    return out.str();
}

std::optional<double> average_improvement(const std::vector<ResultsRow>& rows) {
    std::vector<double> zero;
    std::vector<double> best;
    for (const auto& row : rows) {
        if (auto z = row.zero_shot_mae()) {
            zero.push_back(*z);
            best.push_back(row.best_sae.mae);
        }
    }
    if (zero.empty()) return std::nullopt;
    return pipeline::improvement_report(zero, best);
}

std::string render_front_points(const std::vector<pipeline::EvaluatedIndividual>& front) {
    std::ostringstream out;
    out << "sae,ci,n_shots,chromosome\n";
    for (const auto& ind : front) {
        out << shortest(ind.objectives.sae) << ',' << shortest(ind.objectives.ci) << ','
            << ind.objectives.n_shots << ',';
        for (std::size_t i = 0; i < ind.chromosome.genes.size(); ++i) {
            if (i > 0) out << ';';
            out << ind.chromosome.genes[i];
        }
        out << '\n';
    }
    return out.str();
}

std::string render_history(const std::vector<pipeline::HistoryRow>& history) {
    std::ostringstream out;
    out << "generation,front_size,sae_best,sae_median,ci_best,ci_median,n_best,n_median\n";
    for (const auto& r : history) {
        out << r.generation << ',' << r.front_size << ',' << shortest(r.sae_best) << ','
            << shortest(r.sae_median) << ',' << shortest(r.ci_best) << ','
            << shortest(r.ci_median) << ',' << shortest(r.n_best) << ',' << shortest(r.n_median)
            << '\n';
    }
    return out.str();
}

std::string render_run_report(const Dataset& dataset, const pipeline::RunSettings& settings,
                              const pipeline::RunResult& result) {
    const auto& evo = settings.evolution;
    const auto pareto = pipeline::pareto_json(dataset, settings, result);
    const ResultsRow row = row_from_pareto(pareto);
    const auto& train = dataset.train();

    std::ostringstream out;
    out << "# Shot optimisation report: " << dataset.project() << "\n\n";
    out << "- seed: " << evo.rng_seed << "\n";
    out << "- population: " << evo.population_size << ", generations: " << evo.generations
        << ", crossover rate: " << shortest(evo.crossover_rate)
        << ", mutation rate: " << shortest(evo.mutation_rate) << "\n";
    out << "- train issues: " << train.size()
        << ", test issues: " << result.zero_shot_reference.estimates.size() << "\n";
    out << "- CI quantile p = " << shortest(settings.ci.p) << ", k = " << settings.ci.k << "\n";
    out << "- front source: " << (settings.archive ? "archive of all evaluations" : "final population, rank 0")
        << "\n\n";

    out << "## Pareto front\n\n";
    out << "| N | SAE | MAE | CI | Shots |\n|---|---|---|---|---|\n";
    for (const auto& ind : result.front) {
        out << "| " << ind.objectives.n_shots << " | " << format_fixed(ind.objectives.sae) << " | "
            << format_fixed(ind.mae()) << " | " << format_fixed(ind.objectives.ci) << " | ";
        for (std::size_t i = 0; i < ind.chromosome.genes.size(); ++i) {
            if (i > 0) out << ", ";
            out << train.at(ind.chromosome.genes[i]).key;
        }
        out << " |\n";
    }

    out << "\n## Representatives and baselines (MAE)\n\n" << render_results_table({row});
    out << "\nZero-shot reference evaluation: MAE "
        << format_fixed(result.zero_shot_reference.mae()) << ", CI "
        << format_fixed(result.zero_shot_reference.objectives.ci) << "\n";
    if (auto improvement = average_improvement({row})) {
        out << "Improvement of best-SAE member over zero-shot: " << format_fixed(*improvement)
            << "%\n";
    }

    out << "\n## Estimation health\n\n";
    const double share = result.estimates == 0
                             ? 0.0
                             : static_cast<double>(result.fallback_estimates) /
                                   static_cast<double>(result.estimates);
    out << "Fallback estimates: " << result.fallback_estimates << " of " << result.estimates
        << " (" << format_fixed(100.0 * share) << "%)";
    if (share > 0.10) out << " WARN: more than 10% of estimates fell back to the median";
    out << "\n";
    return out.str();
}

}  // namespace shotforge::report
