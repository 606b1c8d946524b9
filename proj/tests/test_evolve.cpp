#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "getree/evolve.hpp"

using namespace getree;

namespace {

// fitness = number of zero codons; trivially monotone-improvable
FitnessEval count_zeros(const Genotype& g, Rng&) {
    double score = 0;
    for (auto c : g.codons)
        if (c == 0) score += 1;
    return {score, nullptr};
}

std::multiset<std::vector<std::uint32_t>> multiset_of(const std::vector<Individual>& pop) {
    std::multiset<std::vector<std::uint32_t>> out;
    for (const Individual& ind : pop) out.insert(ind.genotype.codons);
    return out;
}

Individual individual(double fitness) {
    Individual ind;
    ind.genotype.codons = {static_cast<std::uint32_t>(fitness)};
    ind.fitness = fitness;
    return ind;
}

}  // namespace

TEST_SUITE("evolve") {

TEST_CASE("mutation with probability zero is the identity") {
    Rng rng(5);
    Genotype g = Genotype::random(128, 65536, rng);
    CHECK(uniform_mutation(g, 0.0, rng) == g);
}

TEST_CASE("mutation with probability one redraws almost every codon") {
    Rng rng(6);
    Genotype g = Genotype::random(4096, 65536, rng);
    Genotype m = uniform_mutation(g, 1.0, rng);
    REQUIRE(m.codons.size() == g.codons.size());
    int changed = 0;
    for (std::size_t i = 0; i < g.codons.size(); ++i) {
        CHECK(m.codons[i] < 65536);
        if (m.codons[i] != g.codons[i]) ++changed;
    }
    // expected fraction 1 - 1/65536; a handful of accidental repeats is fine
    CHECK(changed >= 4060);
}

TEST_CASE("mutation rate matches the binomial model") {
    // mean changed codons over 1000 trials vs binomial(1024, p_change)
    const double p_change = 0.1 * (1.0 - 1.0 / 65536.0);
    Rng rng(7);
    Genotype g = Genotype::random(1024, 65536, rng);
    const int trials = 1000;
    double total_changed = 0;
    for (int t = 0; t < trials; ++t) {
        Genotype m = uniform_mutation(g, 0.1, rng);
        for (std::size_t i = 0; i < g.codons.size(); ++i)
            if (m.codons[i] != g.codons[i]) total_changed += 1;
    }
    const double mean = total_changed / trials;
    const double expected = 1024 * p_change;                      // ~102.4
    const double sigma = std::sqrt(1024 * p_change * (1 - p_change) / trials);
    CHECK(std::abs(mean - expected) < 3 * sigma);
}

TEST_CASE("crossover swaps suffixes at one cut point") {
    Rng rng(8);
    Genotype a, b;
    a.codons = {1, 1, 1, 1};
    b.codons = {2, 2, 2, 2};
    auto [c1, c2] = one_point_crossover(a, b, rng);
    // find the cut: prefix from a, suffix from b
    std::size_t cut = 0;
    while (cut < 4 && c1.codons[cut] == 1) ++cut;
    CHECK(cut >= 1);
    CHECK(cut <= 3);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(c1.codons[i] == (i < cut ? 1u : 2u));
        CHECK(c2.codons[i] == (i < cut ? 2u : 1u));
    }
}

TEST_CASE("crossover of identical parents is the identity") {
    Rng rng(9);
    Genotype a = Genotype::random(32, 100, rng);
    auto [c1, c2] = one_point_crossover(a, a, rng);
    CHECK(c1 == a);
    CHECK(c2 == a);
}

TEST_CASE("crossover conserves the codon multiset") {
    Rng rng(10);
    for (int t = 0; t < 1000; ++t) {
        Genotype a = Genotype::random(16, 1000, rng);
        Genotype b = Genotype::random(16, 1000, rng);
        auto [c1, c2] = one_point_crossover(a, b, rng);
        std::multiset<std::uint32_t> parents(a.codons.begin(), a.codons.end());
        parents.insert(b.codons.begin(), b.codons.end());
        std::multiset<std::uint32_t> children(c1.codons.begin(), c1.codons.end());
        children.insert(c2.codons.begin(), c2.codons.end());
        CHECK(parents == children);
    }
}

TEST_CASE("crossover rejects mismatched lengths") {
    Rng rng(11);
    Genotype a = Genotype::random(8, 10, rng);
    Genotype b = Genotype::random(9, 10, rng);
    CHECK_THROWS_AS(one_point_crossover(a, b, rng), std::invalid_argument);
}

TEST_CASE("tournament of size one is uniform") {
    std::vector<double> fitnesses{1, 2, 3, 4};
    Rng rng(12);
    std::array<int, 4> counts{};
    const int draws = 40000;
    for (int i = 0; i < draws; ++i)
        ++counts[static_cast<std::size_t>(tournament_select(fitnesses, 1, rng))];
    for (int c : counts) {
        CHECK(c > draws / 4 * 0.9);
        CHECK(c < draws / 4 * 1.1);
    }
}

TEST_CASE("a large seeded tournament returns the best individual") {
    std::vector<double> fitnesses{3, 9, 1, 7};
    Rng rng(13);
    for (int i = 0; i < 20; ++i) CHECK(tournament_select(fitnesses, 50, rng) == 1);
}

TEST_CASE("binary tournament selection probabilities follow (2r-1)/n^2") {
    std::vector<double> fitnesses{1, 2, 3, 4};  // rank == value
    Rng rng(14);
    std::array<int, 4> counts{};
    const int draws = 100000;
    for (int i = 0; i < draws; ++i)
        ++counts[static_cast<std::size_t>(tournament_select(fitnesses, 2, rng))];
    for (int r = 1; r <= 4; ++r) {
        const double expected = (2.0 * r - 1.0) / 16.0;
        const double observed = static_cast<double>(counts[static_cast<std::size_t>(r - 1)]) / draws;
        CHECK(observed == doctest::Approx(expected).epsilon(0.05));
    }
}

TEST_CASE("replacement is strict and targets the worst parent") {
    SUBCASE("single parent, better offspring") {
        std::vector<Individual> pop{individual(10)};
        std::vector<Individual> off{individual(12)};
        replace_group(std::array{0}, off, pop);
        CHECK(pop[0].fitness == 12);
    }
    SUBCASE("single parent, equal offspring is rejected") {
        std::vector<Individual> pop{individual(10)};
        std::vector<Individual> off{individual(10)};
        replace_group(std::array{0}, off, pop);
        CHECK(pop[0].fitness == 10);
        CHECK(pop[0].genotype.codons == std::vector<std::uint32_t>{10});
    }
    SUBCASE("two parents, one beaten: best offspring in, worst parent out") {
        std::vector<Individual> pop{individual(5), individual(9)};
        std::vector<Individual> off{individual(7), individual(6)};
        replace_group(std::array{0, 1}, off, pop);
        CHECK(pop[0].fitness == 7);
        CHECK(pop[1].fitness == 9);
    }
    SUBCASE("both offspring beat both parents: best-to-worst pairing") {
        std::vector<Individual> pop{individual(5), individual(9)};
        std::vector<Individual> off{individual(12), individual(10)};
        replace_group(std::array{0, 1}, off, pop);
        CHECK(pop[0].fitness == 12);
        CHECK(pop[1].fitness == 10);
    }
    SUBCASE("offspring below the worst parent never enter") {
        std::vector<Individual> pop{individual(5), individual(9)};
        std::vector<Individual> off{individual(4), individual(3)};
        replace_group(std::array{0, 1}, off, pop);
        CHECK(pop[0].fitness == 5);
        CHECK(pop[1].fitness == 9);
    }
    SUBCASE("a twice-drawn parent is replaced at most once") {
        std::vector<Individual> pop{individual(5)};
        std::vector<Individual> off{individual(8), individual(7)};
        replace_group(std::array{0, 0}, off, pop);
        CHECK(pop[0].fitness == 8);
    }
}

TEST_CASE("best fitness never decreases and the final best beats the first") {
    EvolutionConfig cfg;
    cfg.population_size = 20;
    cfg.generations = 30;
    cfg.genotype_length = 16;
    cfg.codon_max = 8;
    cfg.gene_mutation_probability = 0.2;
    cfg.seed = 71;
    EvolutionResult result = evolve(cfg, count_zeros);
    REQUIRE(result.history.size() == 31);
    for (std::size_t i = 1; i < result.history.size(); ++i)
        CHECK(result.history[i].best_fitness >= result.history[i - 1].best_fitness);
    CHECK(result.history.back().best_fitness > result.history.front().best_fitness);
    CHECK(result.champion.fitness == result.history.back().best_fitness);
    CHECK(result.final_population.size() == 20);
}

TEST_CASE("constant fitness leaves the population multiset unchanged") {
    EvolutionConfig cfg;
    cfg.population_size = 12;
    cfg.generations = 8;
    cfg.genotype_length = 8;
    cfg.codon_max = 16;
    cfg.seed = 99;
    const auto constant = [](const Genotype&, Rng&) { return FitnessEval{1.0, nullptr}; };
    EvolutionResult result = evolve(cfg, constant);
    // replay the initial population draw
    Rng op_rng(derive_seed(cfg.seed, 0x0917));
    std::vector<Individual> initial;
    for (int i = 0; i < cfg.population_size; ++i)
        initial.push_back(Individual{
            Genotype::random(static_cast<std::size_t>(cfg.genotype_length), cfg.codon_max, op_rng),
            1.0, nullptr});
    CHECK(multiset_of(initial) == multiset_of(result.final_population));
}

TEST_CASE("identical seeds give identical runs at any worker count") {
    EvolutionConfig cfg;
    cfg.population_size = 16;
    cfg.generations = 10;
    cfg.genotype_length = 12;
    cfg.codon_max = 32;
    cfg.seed = 1234;
    cfg.crossover_probability = 0.3;
    cfg.tournament_size = 2;

    // the fitness stream must come from the per-individual rng to make the
    // parallel case interesting
    const auto noisy_fitness = [](const Genotype& g, Rng& rng) {
        double score = rng.uniform01();
        for (auto c : g.codons) score += c;
        return FitnessEval{score, nullptr};
    };

    cfg.workers = 1;
    EvolutionResult serial = evolve(cfg, noisy_fitness);
    cfg.workers = 4;
    EvolutionResult parallel = evolve(cfg, noisy_fitness);
    REQUIRE(serial.history.size() == parallel.history.size());
    for (std::size_t i = 0; i < serial.history.size(); ++i) {
        CHECK(serial.history[i].best_fitness == parallel.history[i].best_fitness);
        CHECK(serial.history[i].mean_fitness == parallel.history[i].mean_fitness);
        CHECK(serial.history[i].champion_digest == parallel.history[i].champion_digest);
    }
    CHECK(serial.champion.genotype == parallel.champion.genotype);
}

TEST_CASE("degenerate configurations stay safe") {
    // a single-individual population with random pairing self-pairs
    EvolutionConfig cfg;
    cfg.population_size = 1;
    cfg.generations = 4;
    cfg.genotype_length = 8;
    cfg.codon_max = 16;
    cfg.crossover_probability = 1.0;
    cfg.seed = 3;
    EvolutionResult result = evolve(cfg, count_zeros);
    CHECK(result.final_population.size() == 1);

    cfg.genotype_length = 1;
    CHECK_THROWS_AS(evolve(cfg, count_zeros), std::invalid_argument);
}

TEST_CASE("genotype length is invariant across a whole run") {
    EvolutionConfig cfg;
    cfg.population_size = 10;
    cfg.generations = 6;
    cfg.genotype_length = 24;
    cfg.codon_max = 64;
    cfg.seed = 5;
    cfg.crossover_probability = 0.5;
    cfg.tournament_size = 2;
    EvolutionResult result = evolve(cfg, count_zeros);
    for (const Individual& ind : result.final_population) {
        CHECK(ind.genotype.codons.size() == 24);
        for (auto c : ind.genotype.codons) CHECK(c < 64);
    }
}

}  // TEST_SUITE
