#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "oracles.hpp"
#include "shotforge/errors.hpp"
#include "shotforge/evolve.hpp"

using namespace shotforge;
using namespace shotforge::evolve;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ObjectiveVector ov(double sae, double ci, std::size_t n) { return {sae, ci, n}; }

std::vector<RankedIndividual> ranked(const std::vector<std::pair<std::size_t, double>>& rank_crowd) {
    std::vector<RankedIndividual> out;
    for (const auto& [r, c] : rank_crowd) {
        RankedIndividual ind;
        ind.rank = r;
        ind.crowding = c;
        out.push_back(ind);
    }
    return out;
}

bool valid(const Chromosome& c, std::size_t train_size) {
    if (has_duplicates(c)) return false;
    return std::all_of(c.genes.begin(), c.genes.end(), [&](std::size_t g) { return g < train_size; });
}

}  // namespace

TEST(Dominates, Examples) {
    EXPECT_TRUE(dominates(ov(3, 1, 2), ov(4, 1, 2)));
    EXPECT_FALSE(dominates(ov(1, 5, 0), ov(2, 1, 3)));
    EXPECT_FALSE(dominates(ov(2, 1, 3), ov(1, 5, 0)));
    EXPECT_FALSE(dominates(ov(1, 1, 1), ov(1, 1, 1)));
}

TEST(Dominates, StrictPartialOrder) {
    std::mt19937 gen(4);
    std::vector<ObjectiveVector> pts;
    for (int i = 0; i < 60; ++i) pts.push_back(ov(gen() % 4, gen() % 4, gen() % 4));
    for (const auto& a : pts) {
        EXPECT_FALSE(dominates(a, a));
        for (const auto& b : pts) {
            if (dominates(a, b)) EXPECT_FALSE(dominates(b, a));
            for (const auto& c : pts) {
                if (dominates(a, b) && dominates(b, c)) EXPECT_TRUE(dominates(a, c));
            }
        }
    }
}

TEST(NonDominatedSort, Examples) {
    using Fronts = std::vector<std::vector<std::size_t>>;
    EXPECT_EQ(non_dominated_sort(std::vector<ObjectiveVector>{ov(1, 1, 1), ov(2, 2, 2)}),
              (Fronts{{0}, {1}}));
    EXPECT_EQ(non_dominated_sort(std::vector<ObjectiveVector>{ov(1, 2, 0), ov(2, 1, 0), ov(3, 3, 0),
                                                              ov(1, 1, 0)}),
              (Fronts{{3}, {0, 1}, {2}}));
    EXPECT_EQ(non_dominated_sort(std::vector<ObjectiveVector>(5, ov(2, 2, 2))),
              (Fronts{{0, 1, 2, 3, 4}}));
}

TEST(NonDominatedSort, AgreesWithPeelingOracle) {
    std::mt19937 gen(17);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + gen() % 120;
        const int levels = 2 + static_cast<int>(gen() % 10);
        std::vector<Point> pts(n, Point(3));
        for (auto& p : pts) for (auto& v : p) v = static_cast<double>(gen() % levels);
        const auto fronts = non_dominated_sort(pts);
        const auto want = oracle::peel_ranks(pts);
        std::vector<std::size_t> got(n, n);
        for (std::size_t r = 0; r < fronts.size(); ++r) {
            for (auto i : fronts[r]) {
                EXPECT_EQ(got[i], n) << "index appears twice";
                got[i] = r;
            }
        }
        EXPECT_EQ(got, want);
    }
}

TEST(CrowdingDistance, Examples) {
    EXPECT_EQ(crowding_distance(std::vector<Point>{{1, 2}}), (std::vector<double>{kInf}));
    EXPECT_EQ(crowding_distance(std::vector<Point>{{1, 2}, {2, 1}}), (std::vector<double>{kInf, kInf}));
    const auto d = crowding_distance(std::vector<Point>{{1, 3}, {2, 2}, {3, 1}});
    ASSERT_EQ(d.size(), 3u);
    EXPECT_EQ(d[0], kInf);
    EXPECT_DOUBLE_EQ(d[1], 2.0);
    EXPECT_EQ(d[2], kInf);
}

TEST(CrowdingDistance, DegenerateObjectiveContributesNothing) {
    // Third objective constant: only the first two count.
    const auto d = crowding_distance(std::vector<Point>{{1, 3, 5}, {2, 2, 5}, {3, 1, 5}, {4, 0, 5}});
    EXPECT_EQ(d[0], kInf);
    EXPECT_DOUBLE_EQ(d[1], 2.0 / 3 + 2.0 / 3);
    EXPECT_DOUBLE_EQ(d[2], 2.0 / 3 + 2.0 / 3);
    EXPECT_EQ(d[3], kInf);
}

TEST(Tournament, Rules) {
    const auto pop = ranked({{0, 1.0}, {1, kInf}, {0, kInf}, {0, 1.0}});
    EXPECT_EQ(tournament_winner(pop, 0, 1), 0u);
    EXPECT_EQ(tournament_winner(pop, 1, 0), 0u);
    EXPECT_EQ(tournament_winner(pop, 0, 2), 2u);
    EXPECT_EQ(tournament_winner(pop, 3, 0), 3u);  // full tie: first drawn
    EXPECT_EQ(tournament_winner(pop, 1, 1), 1u);
}

TEST(Tournament, SelectReturnsValidIndex) {
    const auto pop = ranked({{0, 1.0}, {1, kInf}, {2, kInf}});
    Rng rng(1);
    std::map<std::size_t, int> wins;
    for (int i = 0; i < 3000; ++i) ++wins[tournament_select(pop, rng)];
    EXPECT_GT(wins[0], wins[1]);
    EXPECT_GT(wins[1], wins[2]);
    EXPECT_EQ(wins.size(), 3u);
}

TEST(Crossover, Traces) {
    auto [c1, c2] = crossover_at(Chromosome{{1, 2, 3}}, Chromosome{{4, 5}}, 1, 1);
    EXPECT_EQ(c1.genes, (std::vector<std::size_t>{1, 5}));
    EXPECT_EQ(c2.genes, (std::vector<std::size_t>{4, 2, 3}));

    auto [d1, d2] = crossover_at(Chromosome{{1, 2}}, Chromosome{{3, 1}}, 2, 1);
    EXPECT_EQ(d1.genes, (std::vector<std::size_t>{1, 2}));
    EXPECT_EQ(d2.genes, (std::vector<std::size_t>{3}));

    auto [e1, e2] = crossover_at(Chromosome{{7, 8}}, Chromosome{{8, 9, 1}}, 0, 3);
    EXPECT_TRUE(e1.empty());
    EXPECT_EQ(e2.genes, (std::vector<std::size_t>{8, 9, 1, 7}));
}

TEST(Mutation, Traces) {
    EXPECT_EQ(apply_mutation(Chromosome{{2, 7}}, MutationOp::replace, 0, 4).genes,
              (std::vector<std::size_t>{4, 7}));
    EXPECT_EQ(apply_mutation(Chromosome{{2, 7}}, MutationOp::remove, 1, 0).genes,
              (std::vector<std::size_t>{2}));
    EXPECT_EQ(apply_mutation(Chromosome{{2, 7}}, MutationOp::append, 0, 5).genes,
              (std::vector<std::size_t>{2, 7, 5}));
}

TEST(Mutation, EmptyFallsBackToAppend) {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const auto c = mutate(Chromosome{}, 10, rng);
        EXPECT_EQ(c.size(), 1u);
        EXPECT_LT(c.genes[0], 10u);
    }
}

TEST(Mutation, FullChromosomeOnlyShrinksOrStays) {
    Rng rng(5);
    const Chromosome full{{0, 1, 2, 3}};
    int removed = 0;
    for (int i = 0; i < 400; ++i) {
        const auto c = mutate(full, 4, rng);
        if (c.size() == 3) ++removed;
        else EXPECT_EQ(c, full);
    }
    // Remove is drawn a quarter of the time.
    EXPECT_NEAR(removed / 400.0, 0.25, 0.07);
}

TEST(Mutation, OperationFrequencies) {
    Rng rng(8);
    const Chromosome c{{1, 2, 3}};
    int grew = 0, shrank = 0, same_len = 0;
    const int trials = 40000;
    for (int i = 0; i < trials; ++i) {
        const auto m = mutate(c, 50, rng);
        if (m.size() == 4) ++grew;
        else if (m.size() == 2) ++shrank;
        else ++same_len;
    }
    EXPECT_NEAR(same_len / double(trials), 0.5, 0.015);
    EXPECT_NEAR(shrank / double(trials), 0.25, 0.015);
    EXPECT_NEAR(grew / double(trials), 0.25, 0.015);
}

TEST(Operators, RandomTracesStayValid) {
    Rng rng(99);
    const std::size_t train = 25;
    std::vector<Chromosome> pool{Chromosome{}, Chromosome{{0, 1, 2}}, Chromosome{{5, 9}}};
    bool saw_empty = false, saw_long = false;
    for (int step = 0; step < 20000; ++step) {
        const auto& a = pool[rng.below(pool.size())];
        const auto& b = pool[rng.below(pool.size())];
        auto [c1, c2] = crossover(a, b, rng);
        for (auto* c : {&c1, &c2}) {
            if (rng.bernoulli(0.5)) *c = mutate(*c, train, rng, step % 2 ? MutationScheme::categorical
                                                                       : MutationScheme::independent);
            ASSERT_TRUE(valid(*c, train));
            saw_empty |= c->empty();
            saw_long |= c->size() > 8;
        }
        pool[rng.below(pool.size())] = c1;
        if (pool.size() < 40) pool.push_back(c2);
        else pool[rng.below(pool.size())] = c2;
    }
    EXPECT_TRUE(saw_empty);
    EXPECT_TRUE(saw_long);
}

TEST(InitPopulation, LengthsAndGenes) {
    EvolutionConfig cfg;
    Rng rng(2);
    const auto pop = init_population(cfg, 60, rng);
    ASSERT_EQ(pop.size(), 50u);
    std::set<std::size_t> lengths;
    for (const auto& c : pop) {
        EXPECT_LE(c.size(), 8u);
        EXPECT_TRUE(valid(c, 60));
        lengths.insert(c.size());
    }
    EXPECT_GT(lengths.size(), 4u);
}

TEST(InitPopulation, ZeroMaxLengthGivesZeroShot) {
    EvolutionConfig cfg;
    cfg.max_init_len = 0;
    Rng rng(2);
    for (const auto& c : init_population(cfg, 10, rng)) EXPECT_TRUE(c.empty());
}

TEST(InitPopulation, SmallTrainCapsLength) {
    EvolutionConfig cfg;
    Rng rng(4);
    for (const auto& c : init_population(cfg, 3, rng)) EXPECT_LE(c.size(), 3u);
    EXPECT_THROW(init_population(cfg, 0, rng), ConfigError);
}

TEST(InitPopulation, SeedZeroShotFlag) {
    EvolutionConfig cfg;
    cfg.seed_zero_shot = true;
    cfg.max_init_len = 8;
    Rng rng(6);
    const auto pop = init_population(cfg, 60, rng);
    EXPECT_TRUE(std::any_of(pop.begin(), pop.end(), [](const Chromosome& c) { return c.empty(); }));
}

TEST(EvolutionConfig, Validation) {
    EvolutionConfig cfg;
    EXPECT_NO_THROW(validate(cfg));
    cfg.population_size = 1;
    EXPECT_THROW(validate(cfg), ConfigError);
    cfg = {};
    cfg.crossover_rate = 1.5;
    EXPECT_THROW(validate(cfg), ConfigError);
    cfg = {};
    cfg.mutation_rate = -0.1;
    EXPECT_THROW(validate(cfg), ConfigError);
    cfg = {};
    cfg.generations = 0;  // degenerate but legal: the initial population only
    EXPECT_NO_THROW(validate(cfg));
}

TEST(EvolveRun, ConstantFitnessAllRankZero) {
    EvolutionConfig cfg;
    cfg.rng_seed = 5;
    cfg.generations = 5;
    const auto pop = evolve_run(cfg, 30, [](const Chromosome&) { return ov(1, 1, 1); });
    ASSERT_EQ(pop.size(), 50u);
    for (const auto& ind : pop) EXPECT_EQ(ind.rank, 0u);
}

TEST(EvolveRun, ToyProblemFindsLengthThree) {
    EvolutionConfig cfg;
    cfg.rng_seed = 42;
    auto eval = [](const Chromosome& c) {
        const double len = static_cast<double>(c.size());
        return ov(std::fabs(len - 3), 0, c.size());
    };
    const auto pop = evolve_run(cfg, 20, eval);
    const auto front = first_front(pop);
    EXPECT_TRUE(std::any_of(front.begin(), front.end(),
                            [](const RankedIndividual& r) { return r.chromosome.size() == 3; }));
    // Brute force over lengths: the non-dominated lengths are exactly 0..3.
    for (const auto& r : front) EXPECT_LE(r.chromosome.size(), 3u);
}

TEST(EvolveRun, DeterministicAndConstantSize) {
    EvolutionConfig cfg;
    cfg.rng_seed = 7;
    cfg.generations = 8;
    auto eval = [](const Chromosome& c) {
        double s = 0;
        for (auto g : c.genes) s += std::fabs(static_cast<double>(g) - 10.0);
        return ov(s + 50.0 / (1 + c.size()), static_cast<double>(c.size() % 3), c.size());
    };
    std::vector<std::size_t> sizes;
    const auto a = evolve_run(cfg, 40, eval, [&](const EvolutionState& s) { sizes.push_back(s.population.size()); });
    const auto b = evolve_run(cfg, 40, eval);
    EXPECT_EQ(a, b);
    EXPECT_EQ(sizes.size(), 9u);
    for (auto s : sizes) EXPECT_EQ(s, 50u);

    const auto front = first_front(a);
    for (const auto& x : front) {
        for (const auto& y : front) EXPECT_FALSE(dominates(x.objectives, y.objectives));
    }
}

TEST(EvolveRun, ResumeFromIntermediateStateMatches) {
    EvolutionConfig cfg;
    cfg.rng_seed = 11;
    cfg.generations = 6;
    auto eval = [](const Chromosome& c) {
        double s = 0;
        for (auto g : c.genes) s += static_cast<double>((g * 7) % 5);
        return ov(s, static_cast<double>(c.size() % 2), c.size());
    };
    std::optional<EvolutionState> at3;
    const auto full = evolve_run(cfg, 30, eval, [&](const EvolutionState& s) {
        if (s.generation == 3) at3 = s;
    });
    ASSERT_TRUE(at3);
    const auto resumed = evolve_run(cfg, 30, eval, {}, at3);
    EXPECT_EQ(full, resumed);
}

TEST(EvolveRun, EvaluatorFailurePropagates) {
    EvolutionConfig cfg;
    cfg.generations = 3;
    int calls = 0;
    std::size_t last_gen = 0;
    EXPECT_THROW(evolve_run(cfg, 20,
                            [&](const Chromosome& c) {
                                if (++calls > 60) throw std::runtime_error("backend down");
                                return ov(1, 1, c.size());
                            },
                            [&](const EvolutionState& s) { last_gen = s.generation; }),
                 std::runtime_error);
    EXPECT_EQ(last_gen, 0u);
}
