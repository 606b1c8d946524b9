#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "getree/dtree.hpp"
#include "getree/env.hpp"

namespace getree {

// Complexity reading of the interpretability metric:
//   M = -0.2 + 0.2*l + 0.5*n_o + 3.4*n_nao + 4.5*n_naoc
// A lone constant scores exactly 0; lower is easier to interpret.
struct InterpretabilityReport {
    long l = 0;
    long n_o = 0;
    long n_nao = 0;
    long n_naoc = 0;
    double M = 0.0;
};

InterpretabilityReport complexity(const DecisionTree& tree);
InterpretabilityReport complexity(const ExpressionStats& stats);

struct TestOutcome {
    double u = 0.0;        // U statistic of the first sample
    double p_value = 1.0;  // two-tailed
    enum class Method { Exact, NormalApproximation } method = Method::Exact;
};

enum class MannWhitneyMode { Auto, Exact, NormalApproximation };

// Two-tailed Mann-Whitney U test with midrank tie handling. Small samples get
// an exact permutation p-value (complete enumeration of group assignments);
// larger ones the normal approximation with tie and continuity corrections.
// The mode parameter can force one path, mostly for cross-validation.
TestOutcome mann_whitney_u(std::span<const double> a, std::span<const double> b,
                           MannWhitneyMode mode = MannWhitneyMode::Auto);

struct SweepPoint {
    double sigma = 0.0;
    double mean = 0.0;
    double stddev = 0.0;
};

// Greedy performance under additive observation noise, one point per sigma.
std::vector<SweepPoint> noise_sweep(const DecisionTree& tree, Environment& env,
                                    std::span<const double> sigmas, int episodes_per_sigma,
                                    std::uint64_t seed);

// Mean Euclidean distance of the observation from the zero state, per
// timestep, averaged over greedy episodes. Episodes shorter than the horizon
// contribute up to their length.
std::vector<double> stability_trace(const DecisionTree& tree, Environment& env, int episodes,
                                    int horizon, std::uint64_t seed);

}  // namespace getree
