#include "getree/evolve.hpp"

#include <algorithm>
#include <stdexcept>

#include "getree/parallel.hpp"

namespace getree {

Genotype uniform_mutation(const Genotype& g, double gene_prob, Rng& rng) {
    Genotype out = g;
    for (auto& codon : out.codons)
        if (rng.chance(gene_prob)) codon = rng.below(g.codon_max);
    return out;
}

std::pair<Genotype, Genotype> one_point_crossover(const Genotype& a, const Genotype& b,
                                                  Rng& rng) {
    if (a.codons.size() != b.codons.size())
        throw std::invalid_argument("crossover requires equal genotype lengths");
    const std::size_t length = a.codons.size();
    if (length < 2) throw std::invalid_argument("crossover requires length >= 2");
    const std::size_t cut = 1 + rng.below(static_cast<std::uint32_t>(length - 1));
    Genotype c1 = a, c2 = b;
    for (std::size_t i = cut; i < length; ++i) std::swap(c1.codons[i], c2.codons[i]);
    return {std::move(c1), std::move(c2)};
}

int tournament_select(std::span<const double> fitnesses, int size, Rng& rng) {
    if (fitnesses.empty()) throw std::invalid_argument("empty population");
    if (size < 1) throw std::invalid_argument("tournament size must be >= 1");
    int best = static_cast<int>(rng.below(static_cast<std::uint32_t>(fitnesses.size())));
    for (int k = 1; k < size; ++k) {
        const int i = static_cast<int>(rng.below(static_cast<std::uint32_t>(fitnesses.size())));
        if (fitnesses[static_cast<std::size_t>(i)] > fitnesses[static_cast<std::size_t>(best)])
            best = i;
    }
    return best;
}

void replace_group(std::span<const int> parent_indices, std::span<Individual> offspring,
                   std::vector<Individual>& population) {
    if (parent_indices.size() == 1) {
        Individual& parent = population[static_cast<std::size_t>(parent_indices[0])];
        if (offspring[0].fitness > parent.fitness) parent = std::move(offspring[0]);
        return;
    }
    if (parent_indices.size() != 2 || offspring.size() != 2)
        throw std::invalid_argument("crossover groups carry two parents and two offspring");
    int worst = parent_indices[0], best = parent_indices[1];
    if (population[static_cast<std::size_t>(best)].fitness <
        population[static_cast<std::size_t>(worst)].fitness)
        std::swap(worst, best);
    const double worst_fitness = population[static_cast<std::size_t>(worst)].fitness;
    const double best_fitness = population[static_cast<std::size_t>(best)].fitness;
    std::size_t lead = offspring[1].fitness > offspring[0].fitness ? 1 : 0;
    if (offspring[lead].fitness > worst_fitness)
        population[static_cast<std::size_t>(worst)] = std::move(offspring[lead]);
    if (worst == best) return;  // a tournament can draw the same parent twice
    if (offspring[1 - lead].fitness > best_fitness)
        population[static_cast<std::size_t>(best)] = std::move(offspring[1 - lead]);
}

std::string genotype_digest(const Genotype& g) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (std::uint32_t codon : g.codons) {
        for (int b = 0; b < 4; ++b) {
            h ^= (codon >> (8 * b)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    }
    char buf[17];
    static const char* hex = "0123456789abcdef";
    for (int i = 0; i < 16; ++i) buf[15 - i] = hex[(h >> (4 * i)) & 0xf];
    buf[16] = '\0';
    return buf;
}

namespace {

struct OffspringGroup {
    std::vector<int> parents;
    std::vector<Genotype> genotypes;
};

void evaluate(std::vector<Individual>& out, std::span<const Genotype> genotypes,
              const FitnessFn& fitness_fn, const EvolutionConfig& cfg, int generation) {
    out.resize(genotypes.size());
    parallel_for(genotypes.size(), cfg.workers, [&](std::size_t i) {
        Rng rng(derive_seed(cfg.seed, 0xeba1, static_cast<std::uint64_t>(generation),
                            static_cast<std::uint64_t>(i)));
        FitnessEval eval = fitness_fn(genotypes[i], rng);
        out[i] = Individual{genotypes[i], eval.fitness, std::move(eval.tree)};
    });
}

GenerationStats stats_of(int generation, const std::vector<Individual>& population) {
    GenerationStats stats;
    stats.generation = generation;
    std::size_t best = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < population.size(); ++i) {
        sum += population[i].fitness;
        if (population[i].fitness > population[best].fitness) best = i;
    }
    stats.best_fitness = population[best].fitness;
    stats.mean_fitness = sum / static_cast<double>(population.size());
    stats.champion_digest = genotype_digest(population[best].genotype);
    return stats;
}

void track_champion(Individual& champion, bool& have_champion,
                    const std::vector<Individual>& evaluated) {
    for (const Individual& ind : evaluated) {
        if (!have_champion || ind.fitness > champion.fitness) {
            champion = ind;
            have_champion = true;
        }
    }
}

}  // namespace

EvolutionResult evolve(const EvolutionConfig& cfg, const FitnessFn& fitness_fn) {
    if (cfg.population_size < 1 || cfg.generations < 0 || cfg.genotype_length < 1)
        throw std::invalid_argument("invalid evolution configuration");
    if (cfg.crossover_probability > 0.0 && cfg.genotype_length < 2)
        throw std::invalid_argument("crossover needs genotypes of length >= 2");

    Rng op_rng(derive_seed(cfg.seed, 0x0917));
    std::vector<Genotype> genotypes;
    genotypes.reserve(static_cast<std::size_t>(cfg.population_size));
    for (int i = 0; i < cfg.population_size; ++i)
        genotypes.push_back(Genotype::random(static_cast<std::size_t>(cfg.genotype_length),
                                             cfg.codon_max, op_rng));

    EvolutionResult result;
    bool have_champion = false;
    std::vector<Individual> population;
    evaluate(population, genotypes, fitness_fn, cfg, 0);
    track_champion(result.champion, have_champion, population);
    result.history.push_back(stats_of(0, population));

    const bool in_place_mutation_only =
        cfg.crossover_probability == 0.0 && cfg.tournament_size == 0;

    for (int gen = 1; gen <= cfg.generations; ++gen) {
        std::vector<OffspringGroup> groups;
        std::vector<double> fitnesses(population.size());
        for (std::size_t i = 0; i < population.size(); ++i) fitnesses[i] = population[i].fitness;

        if (in_place_mutation_only) {
            // No selection and no crossover: every individual spawns one copy.
            for (int i = 0; i < cfg.population_size; ++i) {
                OffspringGroup group;
                group.parents = {i};
                group.genotypes = {population[static_cast<std::size_t>(i)].genotype};
                groups.push_back(std::move(group));
            }
        } else {
            int pending = 0;
            while (pending < cfg.population_size) {
                int a, b;
                if (cfg.tournament_size > 0) {
                    a = tournament_select(fitnesses, cfg.tournament_size, op_rng);
                    b = tournament_select(fitnesses, cfg.tournament_size, op_rng);
                } else if (population.size() == 1) {
                    a = b = 0;
                } else {
                    // random pairing of two distinct individuals
                    a = static_cast<int>(op_rng.below(static_cast<std::uint32_t>(population.size())));
                    b = static_cast<int>(
                        op_rng.below(static_cast<std::uint32_t>(population.size() - 1)));
                    if (b >= a) ++b;
                }
                if (op_rng.chance(cfg.crossover_probability)) {
                    auto [c1, c2] =
                        one_point_crossover(population[static_cast<std::size_t>(a)].genotype,
                                            population[static_cast<std::size_t>(b)].genotype,
                                            op_rng);
                    OffspringGroup group;
                    group.parents = {a, b};
                    group.genotypes = {std::move(c1), std::move(c2)};
                    groups.push_back(std::move(group));
                } else {
                    // no crossover: each selected parent spawns its own copy
                    for (int p : {a, b}) {
                        OffspringGroup group;
                        group.parents = {p};
                        group.genotypes = {population[static_cast<std::size_t>(p)].genotype};
                        groups.push_back(std::move(group));
                    }
                }
                pending += 2;
            }
        }

        std::vector<Genotype> offspring;
        for (OffspringGroup& group : groups)
            for (Genotype& g : group.genotypes) {
                if (op_rng.chance(cfg.mutation_probability))
                    g = uniform_mutation(g, cfg.gene_mutation_probability, op_rng);
                offspring.push_back(g);
            }

        std::vector<Individual> evaluated;
        evaluate(evaluated, offspring, fitness_fn, cfg, gen);
        track_champion(result.champion, have_champion, evaluated);

        std::size_t cursor = 0;
        for (const OffspringGroup& group : groups) {
            const std::size_t count = group.genotypes.size();
            replace_group(group.parents, std::span(evaluated).subspan(cursor, count), population);
            cursor += count;
        }
        result.history.push_back(stats_of(gen, population));
    }
    result.final_population = std::move(population);
    return result;
}

}  // namespace getree
