#include "shotforge/evolve.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_set>

#include "shotforge/errors.hpp"

namespace shotforge::evolve {

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

Point to_point(const ObjectiveVector& v) {
    const auto a = v.values();
    return {a.begin(), a.end()};
}

std::vector<Point> to_points(std::span<const ObjectiveVector> vs) {
    std::vector<Point> out;
    out.reserve(vs.size());
    for (const auto& v : vs) out.push_back(to_point(v));
    return out;
}

// Appends the genes of `tail` that `head` does not already hold.
Chromosome join_dedup(std::span<const std::size_t> head, std::span<const std::size_t> tail) {
    Chromosome child;
    child.genes.assign(head.begin(), head.end());
    std::unordered_set<std::size_t> seen(head.begin(), head.end());
    for (auto g : tail) {
        if (seen.insert(g).second) child.genes.push_back(g);
    }
    return child;
}

std::vector<std::size_t> unused_genes(const Chromosome& c, std::size_t train_size) {
    std::vector<bool> used(train_size, false);
    for (auto g : c.genes) {
        if (g < train_size) used[g] = true;
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < train_size; ++i) {
        if (!used[i]) out.push_back(i);
    }
    return out;
}

Chromosome mutate_once(const Chromosome& c, std::size_t train_size, Rng& rng, MutationOp op) {
    if (c.empty() && op != MutationOp::append) op = MutationOp::append;
    if (op == MutationOp::remove) {
        return apply_mutation(c, op, rng.below(c.size()), 0);
    }
    const auto unused = unused_genes(c, train_size);
    if (unused.empty()) return c;
    const std::size_t position = op == MutationOp::replace ? rng.below(c.size()) : 0;
    return apply_mutation(c, op, position, unused[rng.below(unused.size())]);
}

// (mu + lambda) truncation of `merged` down to `target` members.
std::vector<RankedIndividual> survive(std::vector<RankedIndividual> merged, std::size_t target) {
    std::vector<ObjectiveVector> objectives;
    objectives.reserve(merged.size());
    for (const auto& m : merged) objectives.push_back(m.objectives);
    const auto fronts = non_dominated_sort(objectives);

    std::vector<RankedIndividual> next;
    next.reserve(target);
    for (std::size_t rank = 0; rank < fronts.size() && next.size() < target; ++rank) {
        const auto& front = fronts[rank];
        std::vector<Point> pts;
        pts.reserve(front.size());
        for (auto idx : front) pts.push_back(to_point(merged[idx].objectives));
        const auto crowd = crowding_distance(pts);

        std::vector<std::size_t> order(front.size());
        std::iota(order.begin(), order.end(), 0);
        if (next.size() + front.size() > target) {
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t x, std::size_t y) { return crowd[x] > crowd[y]; });
            order.resize(target - next.size());
        }
        for (auto o : order) {
            RankedIndividual ind = std::move(merged[front[o]]);
            ind.rank = rank;
            ind.crowding = crowd[o];
            next.push_back(std::move(ind));
        }
    }
    return next;
}

}  // namespace

bool dominates(std::span<const double> u, std::span<const double> v) {
    bool strictly_better = false;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] > v[i]) return false;
        if (u[i] < v[i]) strictly_better = true;
    }
    return strictly_better;
}

bool dominates(const ObjectiveVector& u, const ObjectiveVector& v) {
    const auto a = u.values();
    const auto b = v.values();
    return dominates(std::span<const double>(a), std::span<const double>(b));
}

std::vector<std::vector<std::size_t>> non_dominated_sort(std::span<const Point> points) {
    const std::size_t n = points.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> domination_count(n, 0);
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> current;

    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
            if (dominates(points[p], points[q])) {
                dominated[p].push_back(q);
                ++domination_count[q];
            } else if (dominates(points[q], points[p])) {
                dominated[q].push_back(p);
                ++domination_count[p];
            }
        }
    }
    for (std::size_t p = 0; p < n; ++p) {
        if (domination_count[p] == 0) current.push_back(p);
    }
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (auto p : current) {
            for (auto q : dominated[p]) {
                if (--domination_count[q] == 0) next.push_back(q);
            }
        }
        fronts.push_back(std::move(current));
        std::sort(next.begin(), next.end());
        current = std::move(next);
    }
    return fronts;
}

std::vector<std::vector<std::size_t>> non_dominated_sort(std::span<const ObjectiveVector> points) {
    const auto pts = to_points(points);
    return non_dominated_sort(std::span<const Point>(pts));
}

std::vector<double> crowding_distance(std::span<const Point> front) {
    const std::size_t n = front.size();
    std::vector<double> distance(n, 0.0);
    if (n <= 2) {
        std::fill(distance.begin(), distance.end(), kInfinity);
        return distance;
    }
    const std::size_t m = front.front().size();
    std::vector<std::size_t> order(n);
    for (std::size_t obj = 0; obj < m; ++obj) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            return front[x][obj] < front[y][obj];
        });
        const double lo = front[order.front()][obj];
        const double hi = front[order.back()][obj];
        if (hi == lo) continue;
        distance[order.front()] = kInfinity;
        distance[order.back()] = kInfinity;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            distance[order[i]] += (front[order[i + 1]][obj] - front[order[i - 1]][obj]) / (hi - lo);
        }
    }
    return distance;
}

void validate(const EvolutionConfig& cfg) {
    if (cfg.population_size < 2) {
        throw ConfigError("population_size must be at least 2");
    }
    if (!(cfg.crossover_rate >= 0 && cfg.crossover_rate <= 1)) {
        throw ConfigError("crossover_rate must lie in [0, 1]");
    }
    if (!(cfg.mutation_rate >= 0 && cfg.mutation_rate <= 1)) {
        throw ConfigError("mutation_rate must lie in [0, 1]");
    }
}

std::size_t tournament_winner(std::span<const RankedIndividual> ranked, std::size_t first,
                              std::size_t second) {
    const auto& a = ranked[first];
    const auto& b = ranked[second];
    if (a.rank != b.rank) return a.rank < b.rank ? first : second;
    if (a.crowding != b.crowding) return a.crowding > b.crowding ? first : second;
    return first;
}

std::size_t tournament_select(std::span<const RankedIndividual> ranked, Rng& rng) {
    const std::size_t first = rng.below(ranked.size());
    const std::size_t second = rng.below(ranked.size());
    return tournament_winner(ranked, first, second);
}

std::pair<Chromosome, Chromosome> crossover_at(const Chromosome& a, const Chromosome& b,
                                               std::size_t cut_a, std::size_t cut_b) {
    cut_a = std::min(cut_a, a.size());
    cut_b = std::min(cut_b, b.size());
    const std::span<const std::size_t> ga(a.genes);
    const std::span<const std::size_t> gb(b.genes);
    return {join_dedup(ga.first(cut_a), gb.subspan(cut_b)),
            join_dedup(gb.first(cut_b), ga.subspan(cut_a))};
}

std::pair<Chromosome, Chromosome> crossover(const Chromosome& a, const Chromosome& b, Rng& rng) {
    const std::size_t cut_a = rng.below(a.size() + 1);
    const std::size_t cut_b = rng.below(b.size() + 1);
    return crossover_at(a, b, cut_a, cut_b);
}

Chromosome apply_mutation(Chromosome c, MutationOp op, std::size_t position, std::size_t new_gene) {
    switch (op) {
        case MutationOp::replace:
            c.genes.at(position) = new_gene;
            break;
        case MutationOp::remove:
            c.genes.erase(c.genes.begin() + static_cast<std::ptrdiff_t>(position));
            break;
        case MutationOp::append:
            c.genes.push_back(new_gene);
            break;
    }
    return c;
}

Chromosome mutate(const Chromosome& c, std::size_t train_size, Rng& rng, MutationScheme scheme) {
    if (scheme == MutationScheme::categorical) {
        const double u = rng.uniform01();
        const MutationOp op = u < 0.5    ? MutationOp::replace
                              : u < 0.75 ? MutationOp::remove
                                         : MutationOp::append;
        return mutate_once(c, train_size, rng, op);
    }
    Chromosome out = c;
    if (rng.bernoulli(0.5) && !out.empty()) out = mutate_once(out, train_size, rng, MutationOp::replace);
    if (rng.bernoulli(0.25) && !out.empty()) out = mutate_once(out, train_size, rng, MutationOp::remove);
    if (rng.bernoulli(0.25)) out = mutate_once(out, train_size, rng, MutationOp::append);
    return out;
}

std::vector<Chromosome> init_population(const EvolutionConfig& cfg, std::size_t train_size,
                                        Rng& rng) {
    if (train_size == 0) {
        throw ConfigError("cannot build a population over an empty train set");
    }
    std::vector<Chromosome> population;
    population.reserve(cfg.population_size);
    std::vector<std::size_t> pool(train_size);
    for (std::size_t i = 0; i < cfg.population_size; ++i) {
        const std::size_t len = std::min<std::size_t>(rng.below(cfg.max_init_len + 1), train_size);
        std::iota(pool.begin(), pool.end(), 0);
        Chromosome c;
        for (std::size_t j = 0; j < len; ++j) {
            const std::size_t pick = j + rng.below(train_size - j);
            std::swap(pool[j], pool[pick]);
            c.genes.push_back(pool[j]);
        }
        population.push_back(std::move(c));
    }
    if (cfg.seed_zero_shot && !population.empty() &&
        std::none_of(population.begin(), population.end(),
                     [](const Chromosome& c) { return c.empty(); })) {
        population.front() = Chromosome{};
    }
    return population;
}

void assign_rank_and_crowding(std::vector<RankedIndividual>& population) {
    std::vector<ObjectiveVector> objectives;
    objectives.reserve(population.size());
    for (const auto& ind : population) objectives.push_back(ind.objectives);
    const auto fronts = non_dominated_sort(objectives);
    for (std::size_t rank = 0; rank < fronts.size(); ++rank) {
        std::vector<Point> pts;
        for (auto idx : fronts[rank]) pts.push_back(to_point(population[idx].objectives));
        const auto crowd = crowding_distance(pts);
        for (std::size_t k = 0; k < fronts[rank].size(); ++k) {
            population[fronts[rank][k]].rank = rank;
            population[fronts[rank][k]].crowding = crowd[k];
        }
    }
}

std::vector<RankedIndividual> evolve_run(const EvolutionConfig& cfg, std::size_t train_size,
                                         const Evaluator& evaluate,
                                         const GenerationObserver& observer,
                                         std::optional<EvolutionState> resume_from) {
    validate(cfg);
    EvolutionState state;
    if (resume_from) {
        state = std::move(*resume_from);
        if (state.population.size() != cfg.population_size) {
            throw ConfigError("checkpoint population size " +
                              std::to_string(state.population.size()) +
                              " does not match population_size " +
                              std::to_string(cfg.population_size));
        }
    } else {
        Rng rng = Rng::for_stream(cfg.rng_seed, 0);
        for (auto& c : init_population(cfg, train_size, rng)) {
            RankedIndividual ind;
            ind.objectives = evaluate(c);
            ind.chromosome = std::move(c);
            state.population.push_back(std::move(ind));
        }
        assign_rank_and_crowding(state.population);
        state.generation = 0;
        if (observer) observer(state);
    }

    const std::size_t n = cfg.population_size;
    for (std::size_t gen = state.generation + 1; gen <= cfg.generations; ++gen) {
        Rng rng = Rng::for_stream(cfg.rng_seed, gen);
        std::vector<Chromosome> offspring;
        offspring.reserve(n + 1);
        while (offspring.size() < n) {
            const auto& a = state.population[tournament_select(state.population, rng)].chromosome;
            const auto& b = state.population[tournament_select(state.population, rng)].chromosome;
            auto [c1, c2] = rng.bernoulli(cfg.crossover_rate) ? crossover(a, b, rng)
                                                              : std::pair{a, b};
            for (Chromosome* child : {&c1, &c2}) {
                if (rng.bernoulli(cfg.mutation_rate)) {
                    *child = mutate(*child, train_size, rng, cfg.mutation_scheme);
                }
                if (offspring.size() < n) offspring.push_back(std::move(*child));
            }
        }

        std::vector<RankedIndividual> merged = state.population;
        merged.reserve(2 * n);
        for (auto& c : offspring) {
            RankedIndividual ind;
            ind.objectives = evaluate(c);
            ind.chromosome = std::move(c);
            merged.push_back(std::move(ind));
        }
        state.population = survive(std::move(merged), n);
        state.generation = gen;
        if (observer) observer(state);
    }
    return std::move(state.population);
}

std::vector<RankedIndividual> first_front(std::span<const RankedIndividual> population) {
    std::vector<RankedIndividual> out;
    for (const auto& ind : population) {
        if (ind.rank == 0) out.push_back(ind);
    }
    return out;
}

}  // namespace shotforge::evolve
