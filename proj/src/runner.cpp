#include "getree/runner.hpp"

#include <cmath>
#include <numeric>

namespace getree {

namespace {

double norm_of(std::span<const double> values) {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
}

}  // namespace

EpisodeRecord run_episode(DecisionTree& tree, Environment& env, EpisodeMode mode,
                          const LearnerConfig& cfg, Rng& rng, bool record_distances) {
    EpisodeRecord record;
    if (mode == EpisodeMode::Train) {
        TrainingEpisode episode =
            run_training_episode(tree, env, cfg, rng, record_distances ? &record.distances : nullptr);
        record.total_reward = episode.total_reward;
        record.length = episode.length;
        return record;
    }
    std::vector<double> obs;
    auto view = env.reset(rng);
    obs.assign(view.begin(), view.end());
    for (;;) {
        if (record_distances) record.distances.push_back(norm_of(obs));
        Leaf& leaf = tree.route(obs);
        const StepResult result = env.step(greedy_action(leaf, rng));
        record.total_reward += result.reward;
        ++record.length;
        obs.assign(result.observation.begin(), result.observation.end());
        if (result.done) break;
    }
    return record;
}

ScoreSummary summarize(const std::vector<double>& scores) {
    ScoreSummary s;
    s.scores = scores;
    if (scores.empty()) return s;
    s.mean = std::accumulate(scores.begin(), scores.end(), 0.0) /
             static_cast<double>(scores.size());
    double var = 0.0;
    for (double v : scores) var += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(var / static_cast<double>(scores.size()));
    return s;
}

ScoreSummary evaluate_greedy(const DecisionTree& tree, Environment& env, int episodes,
                             std::uint64_t seed) {
    DecisionTree copy(tree);
    copy.set_visit_tracking(false);
    LearnerConfig unused;
    std::vector<double> scores;
    std::vector<int> lengths;
    scores.reserve(static_cast<std::size_t>(episodes));
    for (int e = 0; e < episodes; ++e) {
        Rng rng(derive_seed(seed, 0x9d15, static_cast<std::uint64_t>(e)));
        const EpisodeRecord record = run_episode(copy, env, EpisodeMode::Greedy, unused, rng);
        scores.push_back(record.total_reward);
        lengths.push_back(record.length);
    }
    ScoreSummary summary = summarize(scores);
    summary.lengths = std::move(lengths);
    return summary;
}

}  // namespace getree
