#pragma once

#include <span>
#include <string>
#include <string_view>

#include "getree/rng.hpp"

namespace getree {

struct StepResult {
    std::span<const double> observation;
    double reward = 0.0;
    bool done = false;
    std::string_view info;  // termination cause, empty while running
};

// Episodic control task. Instances are single-owner mutable state machines;
// parallel evaluation uses one instance per worker. reset() draws any initial
// randomness from the caller's stream, so the environment itself holds no
// hidden seed state.
class Environment {
public:
    virtual ~Environment() = default;

    virtual std::span<const double> reset(Rng& rng) = 0;
    // Throws std::logic_error when called after the episode ended.
    virtual StepResult step(int action) = 0;

    virtual int observation_dim() const = 0;
    virtual int action_count() const = 0;
    virtual int max_steps() const = 0;

    virtual std::span<const std::string> observation_names() const = 0;
    virtual std::span<const std::string> action_names() const = 0;
};

}  // namespace getree
