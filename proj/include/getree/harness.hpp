#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "getree/evolve.hpp"
#include "getree/metrics.hpp"
#include "getree/qlearn.hpp"
#include "getree/runner.hpp"

namespace getree {

struct ExperimentConfig {
    std::string environment;
    std::string grammar_file;  // resolved against the config file's directory
    std::string family;        // "orthogonal" | "oblique" | "ablation"
    EvolutionConfig evolution;
    LearnerConfig learner;
    EarlyStopConfig early_stop;
    int training_episodes = 10;
    int runs = 10;
    int test_episodes = 100;
    int validation_episodes = 100;
    std::uint64_t seed_base = 0;
    std::string output_dir;
    int env_max_steps = 0;          // 0 = environment default
    double observation_sigma = 0.0; // additive observation noise during the experiment

    static ExperimentConfig load(const std::string& path);
    static ExperimentConfig from_json(const nlohmann::json& j, const std::string& base_dir);
    void validate() const;  // throws with field context
};

struct RunRecord {
    int run_index = 0;
    std::uint64_t seed = 0;
    std::uint64_t test_seed = 0;  // feed to `test --seed` to recompute the stats
    bool valid = false;
    std::string error;  // set when the run aborted
    double training_score = 0.0;
    double testing_mean = 0.0;
    double testing_std = 0.0;
    InterpretabilityReport report;            // computed on the simplified champion
    nlohmann::ordered_json champion;          // raw champion tree
    nlohmann::ordered_json champion_simplified;
    std::string history_file;

    nlohmann::ordered_json to_json() const;
};

// Per-run seed; all training/testing/validation streams derive from it.
std::uint64_t run_seed(std::uint64_t seed_base, int run_index);

// Builds the fitness function for one experiment: decode, build the tree,
// train the leaves (or, in ablation mode, evaluate greedily with no updates),
// and score. Decode failures map to the environment's fitness floor.
FitnessFn make_fitness_fn(const ExperimentConfig& cfg,
                          std::shared_ptr<const Grammar> grammar);

// Executes all runs, persists records, histories and the summary table under
// output_dir, and returns the records. A run that fails leaves an error
// record behind without aborting the others.
std::vector<RunRecord> cmd_train(const ExperimentConfig& cfg, int workers);

struct TestOptions {
    std::string tree_file;
    std::string environment;
    int episodes = 100;
    int max_steps = 0;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    std::string csv_out;  // optional per-episode CSV
};

ScoreSummary cmd_test(const TestOptions& opt);

struct SimplifyOptions {
    std::string tree_file;
    std::string environment;
    int episodes = 100;
    std::uint64_t seed = 0;
    int max_steps = 0;
    std::string out_file;
};

DecisionTree cmd_simplify(const SimplifyOptions& opt);

struct InspectResult {
    std::string pretty;
    std::string dot;
    InterpretabilityReport report;
};

InspectResult cmd_inspect(const std::string& tree_file);

// Extracts per-run testing means from a results directory (run_*.json) or a
// JSON file holding an array of numbers / records, then compares the two sets.
TestOutcome cmd_compare(const std::string& results_a, const std::string& results_b,
                        std::vector<double>* means_a = nullptr,
                        std::vector<double>* means_b = nullptr);

struct SweepOptions {
    std::string tree_file;
    std::string environment;
    std::vector<double> sigmas;  // noise sweep when non-empty
    bool stability = false;      // stability trace mode
    int episodes = 100;
    int horizon = 500;
    int max_steps = 0;
    std::uint64_t seed = 0;
    std::string csv_out;
};

// Returns the CSV text written (also written to csv_out when given).
std::string cmd_sweep(const SweepOptions& opt);

std::string format_double(double v);  // shortest round-trip text

}  // namespace getree
