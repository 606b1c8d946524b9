#include "getree/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "getree/envs.hpp"
#include "getree/runner.hpp"

namespace getree {

InterpretabilityReport complexity(const ExpressionStats& stats) {
    InterpretabilityReport report;
    report.l = stats.l;
    report.n_o = stats.n_o;
    report.n_nao = stats.n_nao;
    report.n_naoc = stats.n_naoc;
    report.M = -0.2 + 0.2 * static_cast<double>(stats.l) + 0.5 * static_cast<double>(stats.n_o) +
               3.4 * static_cast<double>(stats.n_nao) + 4.5 * static_cast<double>(stats.n_naoc);
    return report;
}

InterpretabilityReport complexity(const DecisionTree& tree) {
    return complexity(to_expression_stats(tree));
}

namespace {

// midranks of the pooled sample, index-aligned with the pooled values
std::vector<double> midranks(const std::vector<double>& pooled) {
    const std::size_t n = pooled.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

double binomial(std::size_t n, std::size_t k) {
    k = std::min(k, n - k);
    double out = 1.0;
    for (std::size_t i = 1; i <= k; ++i)
        out *= static_cast<double>(n - k + i) / static_cast<double>(i);
    return out;
}

// counts assignments of group A whose U is at least as extreme as observed
double exact_two_tailed(const std::vector<double>& ranks, std::size_t n_a, double u_observed) {
    const std::size_t n = ranks.size();
    const double mu = static_cast<double>(n_a) * static_cast<double>(n - n_a) / 2.0;
    const double observed_dev = std::abs(u_observed - mu) - 1e-9;
    const double offset = static_cast<double>(n_a) * static_cast<double>(n_a + 1) / 2.0;

    std::vector<std::size_t> pick(n_a);
    std::iota(pick.begin(), pick.end(), 0);
    std::uint64_t total = 0, extreme = 0;
    for (;;) {
        double rank_sum = 0.0;
        for (std::size_t idx : pick) rank_sum += ranks[idx];
        ++total;
        if (std::abs(rank_sum - offset - mu) >= observed_dev) ++extreme;
        // advance to the next combination
        std::size_t i = n_a;
        while (i > 0 && pick[i - 1] == n - n_a + i - 1) --i;
        if (i == 0) break;
        ++pick[i - 1];
        for (std::size_t j = i; j < n_a; ++j) pick[j] = pick[j - 1] + 1;
    }
    return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace

TestOutcome mann_whitney_u(std::span<const double> a, std::span<const double> b,
                           MannWhitneyMode mode) {
    if (a.empty() || b.empty()) throw std::invalid_argument("mann_whitney_u needs non-empty samples");
    const std::size_t n_a = a.size(), n_b = b.size(), n = n_a + n_b;
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::vector<double> ranks = midranks(pooled);

    double rank_sum_a = 0.0;
    for (std::size_t i = 0; i < n_a; ++i) rank_sum_a += ranks[i];
    const double u_a = rank_sum_a - static_cast<double>(n_a) * static_cast<double>(n_a + 1) / 2.0;

    TestOutcome outcome;
    outcome.u = u_a;

    const bool exact =
        mode == MannWhitneyMode::Exact ||
        (mode == MannWhitneyMode::Auto && n_a * n_b <= 20000 &&
         binomial(n, std::min(n_a, n_b)) <= 500000.0);
    if (exact) {
        outcome.method = TestOutcome::Method::Exact;
        outcome.p_value = exact_two_tailed(ranks, n_a, u_a);
        return outcome;
    }

    outcome.method = TestOutcome::Method::NormalApproximation;
    const double mu = static_cast<double>(n_a) * static_cast<double>(n_b) / 2.0;
    // tie correction over pooled value multiplicities
    std::vector<double> sorted(pooled);
    std::sort(sorted.begin(), sorted.end());
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    const double nn = static_cast<double>(n);
    const double variance = (static_cast<double>(n_a) * static_cast<double>(n_b) / 12.0) *
                            ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    if (variance <= 0.0) {
        outcome.p_value = 1.0;  // fully tied samples carry no evidence
        return outcome;
    }
    const double z = std::max(std::abs(u_a - mu) - 0.5, 0.0) / std::sqrt(variance);
    outcome.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    return outcome;
}

std::vector<SweepPoint> noise_sweep(const DecisionTree& tree, Environment& env,
                                    std::span<const double> sigmas, int episodes_per_sigma,
                                    std::uint64_t seed) {
    if (sigmas.empty()) throw std::invalid_argument("noise_sweep needs at least one sigma");
    std::vector<SweepPoint> curve;
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
        if (sigmas[i] < 0.0) throw std::invalid_argument("noise sigma must be >= 0");
        NoisyObservationEnv noisy(env, sigmas[i], derive_seed(seed, 0x5137, i));
        const ScoreSummary summary = evaluate_greedy(tree, noisy, episodes_per_sigma, seed);
        curve.push_back(SweepPoint{sigmas[i], summary.mean, summary.stddev});
    }
    return curve;
}

std::vector<double> stability_trace(const DecisionTree& tree, Environment& env, int episodes,
                                    int horizon, std::uint64_t seed) {
    DecisionTree copy(tree);
    copy.set_visit_tracking(false);
    LearnerConfig unused;
    std::vector<double> sums(static_cast<std::size_t>(horizon), 0.0);
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(horizon), 0);
    for (int e = 0; e < episodes; ++e) {
        Rng rng(derive_seed(seed, 0x9d15, static_cast<std::uint64_t>(e)));
        const EpisodeRecord record =
            run_episode(copy, env, EpisodeMode::Greedy, unused, rng, true);
        const std::size_t usable =
            std::min(record.distances.size(), static_cast<std::size_t>(horizon));
        for (std::size_t t = 0; t < usable; ++t) {
            sums[t] += record.distances[t];
            ++counts[t];
        }
    }
    std::vector<double> trace;
    for (std::size_t t = 0; t < sums.size() && counts[t] > 0; ++t)
        trace.push_back(sums[t] / static_cast<double>(counts[t]));
    return trace;
}

}  // namespace getree
