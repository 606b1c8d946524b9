#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "getree/dtree.hpp"
#include "getree/grammar.hpp"
#include "getree/rng.hpp"

namespace getree {

struct EvolutionConfig {
    int population_size = 200;
    int generations = 100;
    int genotype_length = 1024;
    double crossover_probability = 0.0;
    double mutation_probability = 1.0;
    double gene_mutation_probability = 0.1;
    int tournament_size = 0;  // 0 = no selection operator configured
    std::uint32_t codon_max = 65536;
    std::uint64_t seed = 0;
    int workers = 1;
};

struct Individual {
    Genotype genotype;
    double fitness = 0.0;
    std::shared_ptr<const DecisionTree> tree;  // trained phenotype snapshot, may be null
};

struct FitnessEval {
    double fitness = 0.0;
    std::shared_ptr<const DecisionTree> tree;
};

// Evaluates one genotype with its own derived random stream. Must be callable
// from several threads at once.
using FitnessFn = std::function<FitnessEval(const Genotype&, Rng&)>;

struct GenerationStats {
    int generation = 0;
    double best_fitness = 0.0;
    double mean_fitness = 0.0;
    std::string champion_digest;  // hash of the best genotype in the population
};

struct EvolutionResult {
    std::vector<GenerationStats> history;  // entry 0 = initial population
    Individual champion;                   // best individual ever evaluated
    std::vector<Individual> final_population;
};

// Each codon is independently redrawn from [0, codon_max) with probability
// gene_prob; length never changes.
Genotype uniform_mutation(const Genotype& g, double gene_prob, Rng& rng);

// Standard one-point crossover: a cut uniform in [1, L-1], suffixes swapped.
std::pair<Genotype, Genotype> one_point_crossover(const Genotype& a, const Genotype& b,
                                                  Rng& rng);

// Samples `size` indices uniformly with replacement and returns the one with
// the best fitness (ties go to the earliest drawn).
int tournament_select(std::span<const double> fitnesses, int size, Rng& rng);

// Strict-improvement replacement for a one- or two-parent offspring group.
// Single parent: the offspring replaces it only when strictly better. Two
// parents: the best offspring replaces the worst parent when strictly better
// than it; the other offspring additionally replaces the better parent when
// strictly better than that one too.
void replace_group(std::span<const int> parent_indices, std::span<Individual> offspring,
                   std::vector<Individual>& population);

std::string genotype_digest(const Genotype& g);

EvolutionResult evolve(const EvolutionConfig& cfg, const FitnessFn& fitness_fn);

}  // namespace getree
