#pragma once

#include <cstdint>
#include <vector>

#include "getree/dtree.hpp"
#include "getree/env.hpp"
#include "getree/rng.hpp"

namespace getree {

// epsilon-greedy exploration, either a constant epsilon or epsilon0 * decay^k
// with k the visit count of the leaf being acted from.
struct EpsilonSchedule {
    enum class Kind { Constant, Decay };
    Kind kind = Kind::Constant;
    double epsilon = 0.05;
    double epsilon0 = 1.0;
    double multiplier = 0.99;

    double value(std::uint64_t leaf_visits) const;
};

struct LearningRate {
    enum class Kind { Constant, InverseVisits };
    Kind kind = Kind::Constant;
    double alpha = 0.001;
};

struct LeafInit {
    enum class Kind { Uniform, Constant };
    Kind kind = Kind::Uniform;
    double low = -1.0;
    double high = 1.0;
    double value = 0.0;

    std::vector<double> make(int action_count, Rng& rng) const;
};

struct LearnerConfig {
    EpsilonSchedule epsilon;
    LearningRate learning_rate;
    LeafInit init;
    double discount = 0.99;
};

struct EarlyStopConfig {
    bool enabled = false;
    int period = 30;
};

// Draws an action: with probability epsilon (from the schedule, evaluated at
// the leaf's current visit count) a uniformly random action, otherwise the
// greedy one. Increments the leaf visit counter afterwards.
int select_action(Leaf& leaf, const LearnerConfig& cfg, Rng& rng);

// One Q-learning backup on leaf.q[action]. With the inverse-visits schedule
// the per-action visit counter is incremented first and alpha = 1/count, which
// makes q an exact running average of the targets.
void q_update(Leaf& leaf, int action, double reward, double next_max_q, bool terminal,
              const LearnerConfig& cfg);

struct TrainingSummary {
    std::vector<double> episode_scores;
    double fitness = 0.0;
    bool stopped_early = false;
};

struct TrainingEpisode {
    double total_reward = 0.0;
    int length = 0;
};

// One training episode; optionally records ||obs|| before each action.
TrainingEpisode run_training_episode(DecisionTree& tree, Environment& env,
                                     const LearnerConfig& cfg, Rng& rng,
                                     std::vector<double>* distances = nullptr);

// Runs `episodes` training episodes (select_action + q_update per step).
// With early stopping enabled, after every full period the period mean is
// compared against the previous period's and training stops when it drops.
// Fitness is the mean score over all episodes, or over the final completed
// period when early stopping is active.
TrainingSummary train_on_episodes(DecisionTree& tree, Environment& env, int episodes,
                                  const LearnerConfig& cfg, const EarlyStopConfig& stop,
                                  Rng& rng);

}  // namespace getree
