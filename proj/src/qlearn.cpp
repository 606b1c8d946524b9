#include "getree/qlearn.hpp"

#include <cmath>
#include <numeric>

namespace getree {

double EpsilonSchedule::value(std::uint64_t leaf_visits) const {
    if (kind == Kind::Constant) return epsilon;
    return epsilon0 * std::pow(multiplier, static_cast<double>(leaf_visits));
}

std::vector<double> LeafInit::make(int action_count, Rng& rng) const {
    std::vector<double> q(static_cast<std::size_t>(action_count));
    for (double& v : q) v = kind == Kind::Uniform ? rng.uniform(low, high) : value;
    return q;
}

int select_action(Leaf& leaf, const LearnerConfig& cfg, Rng& rng) {
    int action;
    if (leaf.fixed_action) {
        action = *leaf.fixed_action;
    } else {
        const double eps = cfg.epsilon.value(leaf.visits);
        if (rng.chance(eps))
            action = static_cast<int>(rng.below(static_cast<std::uint32_t>(leaf.action_count())));
        else
            action = greedy_action(leaf, rng);
    }
    ++leaf.visits;
    return action;
}

void q_update(Leaf& leaf, int action, double reward, double next_max_q, bool terminal,
              const LearnerConfig& cfg) {
    if (leaf.fixed_action) return;  // nothing to learn in an action leaf
    const auto a = static_cast<std::size_t>(action);
    ++leaf.action_visits[a];
    const double alpha = cfg.learning_rate.kind == LearningRate::Kind::Constant
                             ? cfg.learning_rate.alpha
                             : 1.0 / static_cast<double>(leaf.action_visits[a]);
    const double target = terminal ? reward : reward + cfg.discount * next_max_q;
    leaf.q[a] += alpha * (target - leaf.q[a]);
}

namespace {

double mean_of(std::span<const double> values) {
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
}

double norm_of(std::span<const double> values) {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
}

}  // namespace

TrainingEpisode run_training_episode(DecisionTree& tree, Environment& env,
                                     const LearnerConfig& cfg, Rng& rng,
                                     std::vector<double>* distances) {
    TrainingEpisode episode;
    std::vector<double> obs;
    auto view = env.reset(rng);
    obs.assign(view.begin(), view.end());
    Leaf* leaf = &tree.route(obs);
    for (;;) {
        if (distances) distances->push_back(norm_of(obs));
        const int action = select_action(*leaf, cfg, rng);
        const StepResult result = env.step(action);
        episode.total_reward += result.reward;
        ++episode.length;
        obs.assign(result.observation.begin(), result.observation.end());
        if (result.done) {
            q_update(*leaf, action, result.reward, 0.0, true, cfg);
            break;
        }
        Leaf* next = &tree.route(obs);
        q_update(*leaf, action, result.reward, next->max_q(), false, cfg);
        leaf = next;
    }
    return episode;
}

TrainingSummary train_on_episodes(DecisionTree& tree, Environment& env, int episodes,
                                  const LearnerConfig& cfg, const EarlyStopConfig& stop,
                                  Rng& rng) {
    TrainingSummary summary;
    double previous_period_mean = 0.0;
    bool have_previous_period = false;
    for (int e = 0; e < episodes; ++e) {
        summary.episode_scores.push_back(run_training_episode(tree, env, cfg, rng).total_reward);

        if (stop.enabled && stop.period > 0 &&
            summary.episode_scores.size() % static_cast<std::size_t>(stop.period) == 0) {
            const auto n = summary.episode_scores.size();
            const double period_mean = mean_of(
                std::span(summary.episode_scores).subspan(n - static_cast<std::size_t>(stop.period)));
            if (have_previous_period && period_mean < previous_period_mean) {
                summary.stopped_early = true;
                break;
            }
            previous_period_mean = period_mean;
            have_previous_period = true;
        }
    }

    if (stop.enabled && stop.period > 0 &&
        summary.episode_scores.size() >= static_cast<std::size_t>(stop.period)) {
        // aggregate over the final completed period
        const auto n = summary.episode_scores.size();
        const auto completed = n - n % static_cast<std::size_t>(stop.period);
        summary.fitness = mean_of(std::span(summary.episode_scores)
                                      .subspan(completed - static_cast<std::size_t>(stop.period),
                                               static_cast<std::size_t>(stop.period)));
    } else {
        summary.fitness = mean_of(summary.episode_scores);
    }
    return summary;
}

}  // namespace getree
