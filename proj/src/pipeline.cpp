#include "shotforge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>


#include "shotforge/errors.hpp"
#include "shotforge/report.hpp"

namespace shotforge::pipeline {

namespace {

struct HaltRun {};

double median_of(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    if (n == 0) return 0.0;
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

nlohmann::json crowding_to_json(double crowding) {
    if (std::isinf(crowding)) return "inf";
    return crowding;
}

double crowding_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        throw ParseError("bad crowding value " + j.dump());
    }
    return j.get<double>();
}

nlohmann::json ranked_to_json(const evolve::RankedIndividual& ind) {
    return {{"chromosome", ind.chromosome.genes},
            {"sae", ind.objectives.sae},
            {"ci", ind.objectives.ci},
            {"n_shots", ind.objectives.n_shots},
            {"rank", ind.rank},
            {"crowding", crowding_to_json(ind.crowding)}};
}

evolve::RankedIndividual ranked_from_json(const nlohmann::json& j) {
    evolve::RankedIndividual ind;
    ind.chromosome.genes = j.at("chromosome").get<std::vector<std::size_t>>();
    ind.objectives.sae = j.at("sae").get<double>();
    ind.objectives.ci = j.at("ci").get<double>();
    ind.objectives.n_shots = j.at("n_shots").get<std::size_t>();
    ind.rank = j.at("rank").get<std::size_t>();
    ind.crowding = crowding_from_json(j.at("crowding"));
    return ind;
}

nlohmann::json history_to_json(const HistoryRow& r) {
    return {{"generation", r.generation}, {"front_size", r.front_size},
            {"sae_best", r.sae_best},     {"sae_median", r.sae_median},
            {"ci_best", r.ci_best},       {"ci_median", r.ci_median},
            {"n_best", r.n_best},         {"n_median", r.n_median}};
}

HistoryRow history_from_json(const nlohmann::json& j) {
    HistoryRow r;
    r.generation = j.at("generation").get<std::size_t>();
    r.front_size = j.at("front_size").get<std::size_t>();
    r.sae_best = j.at("sae_best").get<double>();
    r.sae_median = j.at("sae_median").get<double>();
    r.ci_best = j.at("ci_best").get<double>();
    r.ci_median = j.at("ci_median").get<double>();
    r.n_best = j.at("n_best").get<double>();
    r.n_median = j.at("n_median").get<double>();
    return r;
}

// Adds `candidate` unless an archive member dominates it or already holds
// the same chromosome; evicts members it dominates.
void update_archive(std::vector<EvaluatedIndividual>& archive, const EvaluatedIndividual& candidate) {
    for (const auto& member : archive) {
        if (member.chromosome == candidate.chromosome ||
            evolve::dominates(member.objectives, candidate.objectives)) {
            return;
        }
    }
    std::erase_if(archive, [&](const EvaluatedIndividual& member) {
        return evolve::dominates(candidate.objectives, member.objectives);
    });
    archive.push_back(candidate);
}

bool front_order(const EvaluatedIndividual& a, const EvaluatedIndividual& b) {
    if (a.objectives.n_shots != b.objectives.n_shots) return a.objectives.n_shots < b.objectives.n_shots;
    if (a.objectives.sae != b.objectives.sae) return a.objectives.sae < b.objectives.sae;
    if (a.objectives.ci != b.objectives.ci) return a.objectives.ci < b.objectives.ci;
    return a.chromosome < b.chromosome;
}

}  // namespace

double EvaluatedIndividual::mae() const {
    if (estimates.empty()) return 0.0;
    return objectives.sae / static_cast<double>(estimates.size());
}

std::size_t EvaluatedIndividual::fallback_count() const {
    return static_cast<std::size_t>(std::count_if(
        estimates.begin(), estimates.end(), [](const IssueEstimate& e) { return e.fallback; }));
}

nlohmann::json EvaluatedIndividual::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& e : estimates) {
        rows.push_back({{"key", e.key},
                        {"actual", e.actual},
                        {"estimate", e.estimate},
                        {"fallback", e.fallback}});
    }
    return {{"chromosome", chromosome.genes},
            {"sae", objectives.sae},
            {"ci", objectives.ci},
            {"n_shots", objectives.n_shots},
            {"generation", generation},
            {"estimates", std::move(rows)}};
}

EvaluatedIndividual EvaluatedIndividual::from_json(const nlohmann::json& j) {
    EvaluatedIndividual ind;
    ind.chromosome.genes = j.at("chromosome").get<std::vector<std::size_t>>();
    ind.objectives.sae = j.at("sae").get<double>();
    ind.objectives.ci = j.at("ci").get<double>();
    ind.objectives.n_shots = j.at("n_shots").get<std::size_t>();
    ind.generation = j.value("generation", std::size_t{0});
    for (const auto& row : j.at("estimates")) {
        ind.estimates.push_back(IssueEstimate{row.at("key").get<std::string>(),
                                              row.at("actual").get<double>(),
                                              row.at("estimate").get<double>(),
                                              row.value("fallback", false)});
    }
    return ind;
}

FitnessContext::FitnessContext(const Dataset& dataset, Estimator& estimator, stats::CiConfig ci,
                               std::size_t parallelism)
    : train_(dataset.train()),
      test_(effective_test_set(dataset)),
      allowed_(allowed_values(dataset)),
      estimator_(estimator),
      ci_(ci),
      parallelism_(std::max<std::size_t>(parallelism, 1)) {
    stats::validate(ci_);
    if (static_cast<long>(test_.size()) - ci_.k < 1) {
        throw ConfigError("test set of " + std::to_string(test_.size()) + " issues leaves dof < 1 for k = " +
                          std::to_string(ci_.k));
    }
}

EvaluatedIndividual FitnessContext::evaluate(const Chromosome& c, std::size_t generation) const {
    validate_chromosome(c, train_.size());
    std::vector<Shot> shots;
    shots.reserve(c.size());
    for (auto g : c.genes) shots.push_back(Shot{train_[g].text(), train_[g].story_points});

    std::vector<EstimateOutcome> outcomes(test_.size());
    auto estimate_one = [&](std::size_t i) {
        outcomes[i] = estimator_.estimate(EstimateRequest{shots, test_[i].text(), allowed_});
    };
    if (parallelism_ <= 1 || test_.size() < 2) {
        for (std::size_t i = 0; i < test_.size(); ++i) estimate_one(i);
    } else {
        // Estimation is dominated by waiting on the backend, so plain threads
        // pull issue indices from a shared counter.
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::exception_ptr error;
        std::mutex error_mutex;
        {
            std::vector<std::jthread> workers;
            const std::size_t n_workers = std::min(parallelism_, test_.size());
            for (std::size_t w = 0; w < n_workers; ++w) {
                workers.emplace_back([&] {
                    for (std::size_t i = next++; i < test_.size() && !failed; i = next++) {
                        try {
                            estimate_one(i);
                        } catch (...) {
                            std::lock_guard lock(error_mutex);
                            if (!error) error = std::current_exception();
                            failed = true;
                        }
                    }
                });
            }
        }
        if (error) std::rethrow_exception(error);
    }

    EvaluatedIndividual ind;
    ind.chromosome = c;
    ind.generation = generation;
    ind.estimates.reserve(test_.size());
    for (std::size_t i = 0; i < test_.size(); ++i) {
        ind.estimates.push_back(IssueEstimate{test_[i].key, test_[i].story_points,
                                              outcomes[i].value, outcomes[i].fallback});
    }
    ind.objectives = recompute_objectives(ind, ci_);
    return ind;
}

EvaluatedIndividual evaluate_individual(const Chromosome& c, const Dataset& dataset,
                                        Estimator& estimator, const stats::CiConfig& ci,
                                        std::size_t parallelism) {
    return FitnessContext(dataset, estimator, ci, parallelism).evaluate(c);
}

evolve::ObjectiveVector recompute_objectives(const EvaluatedIndividual& ind,
                                             const stats::CiConfig& ci) {
    std::vector<double> actuals;
    std::vector<double> estimates;
    for (const auto& e : ind.estimates) {
        actuals.push_back(e.actual);
        estimates.push_back(e.estimate);
    }
    evolve::ObjectiveVector v;
    v.sae = stats::sae(actuals, estimates);
    v.ci = stats::confidence_interval(stats::ErrorSample{stats::absolute_errors(actuals, estimates)}, ci);
    v.n_shots = ind.chromosome.size();
    return v;
}

Representatives select_representatives(std::span<const EvaluatedIndividual> front) {
    if (front.empty()) throw EmptyInput("cannot pick representatives from an empty front");
    auto pick = [&](auto primary) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < front.size(); ++i) {
            const auto& a = front[i].objectives;
            const auto& b = front[best].objectives;
            const double pa = primary(a);
            const double pb = primary(b);
            if (pa != pb) {
                if (pa < pb) best = i;
                continue;
            }
            if (a.n_shots != b.n_shots) {
                if (a.n_shots < b.n_shots) best = i;
                continue;
            }
            if (a.sae < b.sae) best = i;
        }
        return best;
    };
    Representatives r;
    r.best_sae = pick([](const evolve::ObjectiveVector& v) { return v.sae; });
    r.best_ci = pick([](const evolve::ObjectiveVector& v) { return v.ci; });
    r.min_n = pick([](const evolve::ObjectiveVector& v) { return static_cast<double>(v.n_shots); });
    for (std::size_t i = 0; i < front.size(); ++i) {
        if (front[i].objectives.n_shots == 0) {
            r.zero_shot = i;
            break;
        }
    }
    return r;
}

double improvement_report(std::span<const double> zero_shot_mae, std::span<const double> best_mae) {
    if (zero_shot_mae.size() != best_mae.size() || zero_shot_mae.empty()) {
        throw LengthMismatch("improvement needs equal, non-empty per-project lists");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < zero_shot_mae.size(); ++i) {
        if (!(zero_shot_mae[i] > 0)) {
            throw DomainError("zero-shot MAE must be positive to measure improvement");
        }
        total += 100.0 * (zero_shot_mae[i] - best_mae[i]) / zero_shot_mae[i];
    }
    return total / static_cast<double>(zero_shot_mae.size());
}

HistoryRow summarize_generation(std::size_t generation,
                                std::span<const evolve::RankedIndividual> population) {
    HistoryRow row;
    row.generation = generation;
    std::vector<double> sae, ci, n;
    for (const auto& ind : population) {
        if (ind.rank == 0) ++row.front_size;
        sae.push_back(ind.objectives.sae);
        ci.push_back(ind.objectives.ci);
        n.push_back(static_cast<double>(ind.objectives.n_shots));
    }
    if (population.empty()) return row;
    row.sae_best = *std::min_element(sae.begin(), sae.end());
    row.ci_best = *std::min_element(ci.begin(), ci.end());
    row.n_best = *std::min_element(n.begin(), n.end());
    row.sae_median = median_of(std::move(sae));
    row.ci_median = median_of(std::move(ci));
    row.n_median = median_of(std::move(n));
    return row;
}

nlohmann::json RunState::to_json() const {
    nlohmann::json pop = nlohmann::json::array();
    for (const auto& ind : population) pop.push_back(ranked_to_json(ind));
    nlohmann::json records = nlohmann::json::array();
    for (const auto& ind : evaluated) records.push_back(ind.to_json());
    nlohmann::json arch = nlohmann::json::array();
    for (const auto& ind : archive) arch.push_back(ind.to_json());
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& row : history) hist.push_back(history_to_json(row));
    return {{"format", 1},
            {"rng", {{"seed", seed}, {"next_stream", generation + 1}}},
            {"generation", generation},
            {"population", std::move(pop)},
            {"evaluated", std::move(records)},
            {"archive", std::move(arch)},
            {"history", std::move(hist)},
            {"estimates", estimates},
            {"fallback_estimates", fallback_estimates}};
}

RunState RunState::from_json(const nlohmann::json& j) {
    try {
        RunState s;
        if (j.at("format").get<int>() != 1) throw ParseError("unsupported checkpoint format");
        s.seed = j.at("rng").at("seed").get<std::uint64_t>();
        s.generation = j.at("generation").get<std::size_t>();
        for (const auto& x : j.at("population")) s.population.push_back(ranked_from_json(x));
        for (const auto& x : j.at("evaluated")) s.evaluated.push_back(EvaluatedIndividual::from_json(x));
        for (const auto& x : j.at("archive")) s.archive.push_back(EvaluatedIndividual::from_json(x));
        for (const auto& x : j.at("history")) s.history.push_back(history_from_json(x));
        s.estimates = j.at("estimates").get<std::size_t>();
        s.fallback_estimates = j.at("fallback_estimates").get<std::size_t>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    }
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw Error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void save_state(const RunState& state, const std::filesystem::path& path) {
    write_atomic(path, state.to_json().dump() + "\n");
}

RunState load_state(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("no checkpoint at " + path.string());
    try {
        return RunState::from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

RunResult run_optimization(const Dataset& dataset, Estimator& estimator,
                           const RunSettings& settings, const RunPaths& paths, bool resume) {
    const auto& evo = settings.evolution;
    evolve::validate(evo);
    FitnessContext ctx(dataset, estimator, settings.ci, settings.parallelism);
    std::filesystem::create_directories(paths.dir);

    const std::size_t calls_before = estimator.backend_calls();
    const std::size_t hits_before = estimator.cache_hits();

    RunState state;
    std::optional<evolve::EvolutionState> resume_from;
    std::map<Chromosome, EvaluatedIndividual> known;
    if (resume) {
        state = load_state(paths.state());
        if (state.seed != evo.rng_seed) {
            throw ConfigError("checkpoint seed " + std::to_string(state.seed) +
                              " does not match configured seed " + std::to_string(evo.rng_seed));
        }
        for (const auto& rec : state.evaluated) known.emplace(rec.chromosome, rec);
        resume_from = evolve::EvolutionState{state.generation, state.population};
    } else {
        state.seed = evo.rng_seed;
    }

    std::size_t current_generation = resume ? state.generation + 1 : 0;
    auto evaluate = [&](const Chromosome& c) {
        if (auto it = known.find(c); it != known.end()) return it->second.objectives;
        EvaluatedIndividual rec = ctx.evaluate(c, current_generation);
        state.estimates += rec.estimates.size();
        state.fallback_estimates += rec.fallback_count();
        if (settings.archive) update_archive(state.archive, rec);
        const auto objectives = rec.objectives;
        known.emplace(c, std::move(rec));
        return objectives;
    };

    auto observe = [&](const evolve::EvolutionState& es) {
        state.generation = es.generation;
        state.population = es.population;
        std::map<Chromosome, EvaluatedIndividual> kept;
        for (const auto& ind : es.population) kept.emplace(ind.chromosome, known.at(ind.chromosome));
        for (const auto& rec : state.archive) kept.emplace(rec.chromosome, rec);
        known = std::move(kept);
        state.evaluated.clear();
        for (const auto& [_, rec] : known) state.evaluated.push_back(rec);
        state.history.push_back(summarize_generation(es.generation, es.population));
        save_state(state, paths.state());
        current_generation = es.generation + 1;
        if (settings.halt_after && es.generation >= *settings.halt_after &&
            es.generation < evo.generations) {
            throw HaltRun{};
        }
    };

    RunResult result;
    std::vector<evolve::RankedIndividual> final_population;
    try {
        final_population =
            evolve::evolve_run(evo, ctx.train().size(), evaluate, observe, std::move(resume_from));
    } catch (const HaltRun&) {
        result.completed = false;
        result.generation = state.generation;
        result.history = state.history;
        result.estimates = state.estimates;
        result.fallback_estimates = state.fallback_estimates;
        result.backend_calls = estimator.backend_calls() - calls_before;
        result.cache_hits = estimator.cache_hits() - hits_before;
        return result;
    }

    result.completed = true;
    result.generation = state.generation;
    if (settings.archive) {
        result.front = state.archive;
    } else {
        std::set<Chromosome> seen;
        for (const auto& ind : evolve::first_front(final_population)) {
            if (seen.insert(ind.chromosome).second) result.front.push_back(known.at(ind.chromosome));
        }
    }
    std::sort(result.front.begin(), result.front.end(), front_order);
    result.representatives = select_representatives(result.front);
    if (auto it = known.find(Chromosome{}); it != known.end()) {
        result.zero_shot_reference = it->second;
    } else {
        result.zero_shot_reference = ctx.evaluate(Chromosome{}, 0);
    }
    result.baselines = baselines::run_baselines(dataset, settings.random_guess);
    result.history = state.history;
    result.estimates = state.estimates;
    result.fallback_estimates = state.fallback_estimates;
    result.backend_calls = estimator.backend_calls() - calls_before;
    result.cache_hits = estimator.cache_hits() - hits_before;

    write_atomic(paths.pareto(), pareto_json(dataset, settings, result).dump(2) + "\n");
    write_atomic(paths.history(), report::render_history(result.history));
    write_atomic(paths.front_points(), report::render_front_points(result.front));
    write_atomic(paths.report(), report::render_run_report(dataset, settings, result));
    return result;
}

nlohmann::json pareto_json(const Dataset& dataset, const RunSettings& settings,
                           const RunResult& result) {
    const auto& train = dataset.train();
    auto member = [&](const EvaluatedIndividual& ind) {
        nlohmann::json j = ind.to_json();
        std::vector<std::string> keys;
        for (auto g : ind.chromosome.genes) keys.push_back(train.at(g).key);
        j["shot_keys"] = keys;
        j["mae"] = ind.mae();
        return j;
    };
    nlohmann::json front = nlohmann::json::array();
    for (const auto& ind : result.front) front.push_back(member(ind));
    const auto& reps = result.representatives;
    return {
        {"project", dataset.project()},
        {"seed", settings.evolution.rng_seed},
        {"population_size", settings.evolution.population_size},
        {"generations", settings.evolution.generations},
        {"archive", settings.archive},
        {"ci", {{"p", settings.ci.p}, {"k", settings.ci.k}}},
        {"n_train", train.size()},
        {"n_test", result.zero_shot_reference.estimates.size()},
        {"front", std::move(front)},
        {"representatives",
         {{"zero_shot", reps.zero_shot ? nlohmann::json(*reps.zero_shot) : nlohmann::json()},
          {"best_sae", reps.best_sae},
          {"best_ci", reps.best_ci},
          {"min_n", reps.min_n}}},
        {"zero_shot_reference", member(result.zero_shot_reference)},
        {"baselines", result.baselines.to_json()},
        {"estimates", result.estimates},
        {"fallback_estimates", result.fallback_estimates},
    };
}

}  // namespace shotforge::pipeline
