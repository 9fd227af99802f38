#include "shotforge/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "shotforge/errors.hpp"
#include "shotforge/rng.hpp"
#include "shotforge/stats.hpp"

namespace shotforge::baselines {

namespace {

void require_inputs(std::span<const double> train_sps, std::span<const Issue> test) {
    if (train_sps.empty()) throw EmptyInput("baseline needs at least one training story point");
    if (test.empty()) throw EmptyInput("baseline needs at least one test issue");
}

BaselineResult constant_predictor(BaselineKind kind, double prediction,
                                  std::span<const Issue> test) {
    BaselineResult r;
    r.name = kind;
    r.predictions.assign(test.size(), prediction);
    const auto actuals = story_points(test);
    r.mae = stats::mae(actuals, r.predictions);
    return r;
}

}  // namespace

std::string to_string(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::mean: return "mean";
        case BaselineKind::median: return "median";
        case BaselineKind::random_guess: return "random_guess";
    }
    return "unknown";
}

BaselineKind baseline_kind_from_string(const std::string& name) {
    if (name == "mean") return BaselineKind::mean;
    if (name == "median") return BaselineKind::median;
    if (name == "random_guess") return BaselineKind::random_guess;
    throw ParseError("unknown baseline '" + name + "'");
}

std::vector<double> story_points(std::span<const Issue> issues) {
    std::vector<double> out;
    out.reserve(issues.size());
    for (const auto& issue : issues) out.push_back(issue.story_points);
    return out;
}

BaselineResult mean_baseline(std::span<const double> train_sps, std::span<const Issue> test) {
    require_inputs(train_sps, test);
    return constant_predictor(BaselineKind::mean, stats::mean(train_sps), test);
}

BaselineResult median_baseline(std::span<const double> train_sps, std::span<const Issue> test) {
    require_inputs(train_sps, test);
    std::vector<double> sorted(train_sps.begin(), train_sps.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    return constant_predictor(BaselineKind::median, median, test);
}

BaselineResult random_guess_baseline(std::span<const double> train_sps,
                                     std::span<const Issue> test, RandomGuessMode mode) {
    require_inputs(train_sps, test);
    BaselineResult r;
    r.name = BaselineKind::random_guess;
    const auto actuals = story_points(test);
    if (mode.exact) {
        double total = 0.0;
        for (double a : actuals) {
            for (double t : train_sps) total += std::abs(a - t);
        }
        r.mae = total / (static_cast<double>(actuals.size()) * static_cast<double>(train_sps.size()));
        return r;
    }
    if (mode.draws == 0) throw EmptyInput("sampled random guessing needs at least one draw");
    Rng rng(mode.seed);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t d = 0; d < mode.draws; ++d) {
        double err = 0.0;
        for (double a : actuals) err += std::abs(a - train_sps[rng.below(train_sps.size())]);
        const double draw_mae = err / static_cast<double>(actuals.size());
        sum += draw_mae;
        sum_sq += draw_mae * draw_mae;
    }
    const double n = static_cast<double>(mode.draws);
    r.mae = sum / n;
    r.draws = mode.draws;
    if (mode.draws > 1) {
        const double var = std::max(0.0, (sum_sq - n * r.mae * r.mae) / (n - 1));
        r.standard_error = std::sqrt(var / n);
    } else {
        r.standard_error = 0.0;
    }
    return r;
}

const BaselineResult* BaselineReport::find(BaselineKind kind) const {
    for (const auto& r : results) {
        if (r.name == kind) return &r;
    }
    return nullptr;
}

nlohmann::json BaselineReport::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : results) {
        nlohmann::json row = {{"name", to_string(r.name)}, {"mae", r.mae}};
        if (!r.predictions.empty()) row["predictions"] = r.predictions;
        if (r.draws) row["draws"] = *r.draws;
        if (r.standard_error) row["standard_error"] = *r.standard_error;
        rows.push_back(std::move(row));
    }
    return {{"project", project}, {"n_train", n_train}, {"n_test", n_test}, {"baselines", rows}};
}

BaselineReport BaselineReport::from_json(const nlohmann::json& j) {
    try {
        BaselineReport report;
        report.project = j.at("project").get<std::string>();
        report.n_train = j.at("n_train").get<std::size_t>();
        report.n_test = j.at("n_test").get<std::size_t>();
        for (const auto& row : j.at("baselines")) {
            BaselineResult r;
            r.name = baseline_kind_from_string(row.at("name").get<std::string>());
            r.mae = row.at("mae").get<double>();
            if (row.contains("predictions")) r.predictions = row["predictions"].get<std::vector<double>>();
            if (row.contains("draws")) r.draws = row["draws"].get<std::size_t>();
            if (row.contains("standard_error")) r.standard_error = row["standard_error"].get<double>();
            report.results.push_back(std::move(r));
        }
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("baseline report: ") + e.what());
    }
}

BaselineReport run_baselines(const Dataset& d, RandomGuessMode mode) {
    const auto test = effective_test_set(d);
    const auto train_sps = story_points(d.train());
    BaselineReport report;
    report.project = d.project();
    report.n_train = train_sps.size();
    report.n_test = test.size();
    report.results.push_back(mean_baseline(train_sps, test));
    report.results.push_back(median_baseline(train_sps, test));
    report.results.push_back(random_guess_baseline(train_sps, test, mode));
    return report;
}

}  // namespace shotforge::baselines
