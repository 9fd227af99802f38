#pragma once

// NSGA-II over variable-length shot sets.
//
// A chromosome is an ordered list of distinct train-set indices. Crossover
// cuts each parent at its own breakpoint, so offspring may be empty or grow
// past the initial length cap; mutation replaces, removes or appends one
// gene. Survival is the usual (mu + lambda) rank-then-crowding truncation.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "shotforge/domain.hpp"
#include "shotforge/rng.hpp"

namespace shotforge::evolve {

/// (SAE, CI, N), every component minimised.
struct ObjectiveVector {
    double sae = 0.0;
    double ci = 0.0;
    std::size_t n_shots = 0;

    std::array<double, 3> values() const {
        return {sae, ci, static_cast<double>(n_shots)};
    }
    bool operator==(const ObjectiveVector&) const = default;
};

using Point = std::vector<double>;

/// u <= v everywhere and u < v somewhere.
bool dominates(std::span<const double> u, std::span<const double> v);
bool dominates(const ObjectiveVector& u, const ObjectiveVector& v);

/// Fast non-dominated sort. Fronts come back in rank order, members of each
/// front in ascending index order.
std::vector<std::vector<std::size_t>> non_dominated_sort(std::span<const Point> points);
std::vector<std::vector<std::size_t>> non_dominated_sort(std::span<const ObjectiveVector> points);

/// Crowding distance of each member of one front. Fronts of one or two
/// members are all boundary (infinite). Otherwise, per objective, the two
/// extreme members are infinite and interior members accumulate
/// (next - prev) / (max - min); an objective with max == min is skipped.
std::vector<double> crowding_distance(std::span<const Point> front);

enum class MutationScheme {
    categorical,  ///< one of replace/remove/append per event (0.5/0.25/0.25)
    independent,  ///< each operation gets its own coin flip, applied in that order
};

struct EvolutionConfig {
    std::size_t population_size = 50;
    std::size_t generations = 20;
    double crossover_rate = 0.2;
    double mutation_rate = 0.8;
    std::size_t max_init_len = 8;
    std::uint64_t rng_seed = 0;
    MutationScheme mutation_scheme = MutationScheme::categorical;
    /// Force a zero-shot member into the initial population.
    bool seed_zero_shot = false;
};

/// Throws ConfigError naming the offending field.
void validate(const EvolutionConfig& cfg);

struct RankedIndividual {
    Chromosome chromosome;
    ObjectiveVector objectives;
    std::size_t rank = 0;
    double crowding = 0.0;

    bool operator==(const RankedIndividual&) const = default;
};

/// Binary tournament between two given candidates: lower rank, then larger
/// crowding, then the first one.
std::size_t tournament_winner(std::span<const RankedIndividual> ranked, std::size_t first,
                              std::size_t second);
/// Draws two candidates uniformly (with replacement) and returns the winner.
std::size_t tournament_select(std::span<const RankedIndividual> ranked, Rng& rng);

/// child1 = a[0, cut_a) ++ b[cut_b, end), child2 = b[0, cut_b) ++ a[cut_a, end);
/// genes of the appended block already present in the prefix are dropped.
std::pair<Chromosome, Chromosome> crossover_at(const Chromosome& a, const Chromosome& b,
                                               std::size_t cut_a, std::size_t cut_b);
/// crossover_at with cuts drawn uniformly from {0..|a|} and {0..|b|}.
std::pair<Chromosome, Chromosome> crossover(const Chromosome& a, const Chromosome& b, Rng& rng);

enum class MutationOp { replace, remove, append };

/// Deterministic core of mutation: `position` selects the gene to replace or
/// remove, `new_gene` is the incoming index for replace/append. The new gene
/// must not already be present.
Chromosome apply_mutation(Chromosome c, MutationOp op, std::size_t position, std::size_t new_gene);

/// One mutation event. Degenerate draws fall through: remove or replace on
/// an empty chromosome appends instead; replace or append with no unused
/// train index leaves the chromosome unchanged.
Chromosome mutate(const Chromosome& c, std::size_t train_size, Rng& rng,
                  MutationScheme scheme = MutationScheme::categorical);

/// Lengths uniform in {0..max_init_len} (capped by train_size), genes drawn
/// without replacement. Throws ConfigError when train_size == 0.
std::vector<Chromosome> init_population(const EvolutionConfig& cfg, std::size_t train_size,
                                        Rng& rng);

/// Fills rank and crowding; population order is unchanged.
void assign_rank_and_crowding(std::vector<RankedIndividual>& population);

/// Snapshot after `generation` completed generations (0 = evaluated initial
/// population).
struct EvolutionState {
    std::size_t generation = 0;
    std::vector<RankedIndividual> population;
};

using Evaluator = std::function<ObjectiveVector(const Chromosome&)>;
using GenerationObserver = std::function<void(const EvolutionState&)>;

/// Runs NSGA-II for cfg.generations generations, or continues `resume_from`
/// up to that count. `observer` sees the state after initialisation and after
/// every generation; exceptions from it or from `evaluate` propagate, leaving
/// the last observed state as the checkpoint. Returns the final population.
std::vector<RankedIndividual> evolve_run(const EvolutionConfig& cfg, std::size_t train_size,
                                         const Evaluator& evaluate,
                                         const GenerationObserver& observer = {},
                                         std::optional<EvolutionState> resume_from = std::nullopt);

/// Rank-0 members, in population order.
std::vector<RankedIndividual> first_front(std::span<const RankedIndividual> population);

}  // namespace shotforge::evolve
