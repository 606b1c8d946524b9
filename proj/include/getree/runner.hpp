#pragma once

#include <vector>

#include "getree/dtree.hpp"
#include "getree/env.hpp"
#include "getree/qlearn.hpp"

namespace getree {

enum class EpisodeMode { Train, Greedy };

struct EpisodeRecord {
    double total_reward = 0.0;
    int length = 0;
    std::vector<double> distances;  // ||obs|| before each action, when requested
};

// One episode. Train mode performs select_action + q_update per step; greedy
// mode picks argmax actions and leaves the tree untouched.
EpisodeRecord run_episode(DecisionTree& tree, Environment& env, EpisodeMode mode,
                          const LearnerConfig& cfg, Rng& rng, bool record_distances = false);

struct ScoreSummary {
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation
    std::vector<double> scores;
    std::vector<int> lengths;
};

ScoreSummary summarize(const std::vector<double>& scores);

// Greedy evaluation over `episodes` episodes with per-episode derived seeds.
ScoreSummary evaluate_greedy(const DecisionTree& tree, Environment& env, int episodes,
                             std::uint64_t seed);

}  // namespace getree
