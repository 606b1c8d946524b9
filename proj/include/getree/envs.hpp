#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "getree/env.hpp"

namespace getree {

// Classic cart-pole balancing task: force of +-10 N on the cart, explicit
// Euler integration with tau = 0.02, reward +1 per timestep, termination when
// |x| > 2.4, |theta| > 12 degrees, or the step budget runs out.
class CartPoleEnv final : public Environment {
public:
    static constexpr double kGravity = 9.8;
    static constexpr double kCartMass = 1.0;
    static constexpr double kPoleMass = 0.1;
    static constexpr double kPoleHalfLength = 0.5;
    static constexpr double kForce = 10.0;
    static constexpr double kTau = 0.02;
    static constexpr double kXThreshold = 2.4;
    static constexpr double kThetaThreshold = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;

    explicit CartPoleEnv(int max_steps = 500) : max_steps_(max_steps) {}

    std::span<const double> reset(Rng& rng) override;
    StepResult step(int action) override;
    int observation_dim() const override { return 4; }
    int action_count() const override { return 2; }
    int max_steps() const override { return max_steps_; }
    std::span<const std::string> observation_names() const override;
    std::span<const std::string> action_names() const override;

    void set_state(double x, double v, double theta, double omega);

private:
    std::array<double, 4> state_{};  // x, v, theta, omega
    int steps_ = 0;
    bool done_ = true;
    int max_steps_;
};

// Classic mountain-car task: engine force 0.001, gravity term 0.0025*cos(3x),
// reward -1 per timestep, 200-step budget, goal at x >= 0.5.
class MountainCarEnv final : public Environment {
public:
    static constexpr double kForce = 0.001;
    static constexpr double kGravity = 0.0025;
    static constexpr double kMinX = -1.2;
    static constexpr double kMaxX = 0.6;
    static constexpr double kMaxV = 0.07;
    static constexpr double kGoalX = 0.5;

    explicit MountainCarEnv(int max_steps = 200) : max_steps_(max_steps) {}

    std::span<const double> reset(Rng& rng) override;
    StepResult step(int action) override;
    int observation_dim() const override { return 2; }
    int action_count() const override { return 3; }
    int max_steps() const override { return max_steps_; }
    std::span<const std::string> observation_names() const override;
    std::span<const std::string> action_names() const override;

    void set_state(double x, double v);

private:
    std::array<double, 2> state_{};  // x, v
    int steps_ = 0;
    bool done_ = true;
    int max_steps_;
};

// Simplified planar lander with the LunarLander observation/action/reward
// contract: 8-dimensional observation (p_x, p_y, v_x, v_y, theta, omega, leg
// contacts), four actions (nop, left engine, main engine, right engine),
// potential-based shaping rewards, fuel costs of 0.3 (main) and 0.03 (side)
// per firing step, -100 on crash or leaving the lateral bounds, +100 on
// coming to rest on the pad, and a 1000-step budget. This is intentionally
// not the Box2D simulation; absolute scores are not comparable to it.
class LunarLanderEnv final : public Environment {
public:
    static constexpr double kTau = 0.05;
    static constexpr double kGravity = 0.5;
    static constexpr double kMainAccel = 1.0;
    static constexpr double kSideAccel = 0.1;
    static constexpr double kTorque = 0.6;
    static constexpr double kLegSpan = 0.15;    // lateral leg offset
    static constexpr double kLegHeight = 0.1;   // vertical leg reach
    static constexpr double kCrashSpeed = 0.4;  // |v_y| above this on contact crashes
    static constexpr double kCrashTilt = 0.5;   // |theta| above this on contact crashes
    static constexpr double kRestTilt = 0.25;   // both-legs tilt limit for a safe rest
    static constexpr double kXBound = 1.0;
    static constexpr double kStartAltitude = 1.4;
    static constexpr double kMainCost = 0.3;
    static constexpr double kSideCost = 0.03;

    struct State {
        double x = 0, y = 0, vx = 0, vy = 0, theta = 0, omega = 0;
        bool left_contact = false, right_contact = false;
    };

    struct StepBreakdown {
        double shaping_delta = 0;
        double fuel_cost = 0;
        double terminal_bonus = 0;  // +100 landed, -100 crash/out of bounds
    };

    explicit LunarLanderEnv(int max_steps = 1000) : max_steps_(max_steps) {}

    std::span<const double> reset(Rng& rng) override;
    StepResult step(int action) override;
    int observation_dim() const override { return 8; }
    int action_count() const override { return 4; }
    int max_steps() const override { return max_steps_; }
    std::span<const std::string> observation_names() const override;
    std::span<const std::string> action_names() const override;

    const State& state() const { return state_; }
    void set_state(const State& s);
    const StepBreakdown& last_step() const { return last_step_; }

    // shaping potential: -100(|p| + |v| + |theta|) + 10 per leg in contact
    static double potential(const State& s);

private:
    void refresh_observation();

    State state_{};
    std::array<double, 8> obs_{};
    StepBreakdown last_step_{};
    int steps_ = 0;
    bool done_ = true;
    int max_steps_;
};

// Adds i.i.d. N(0, sigma^2) noise to every observation component. Rewards,
// termination, and the wrapped environment's state are untouched; sigma = 0
// passes observations through bit-identically.
class NoisyObservationEnv final : public Environment {
public:
    NoisyObservationEnv(Environment& inner, double sigma, std::uint64_t seed);
    NoisyObservationEnv(std::unique_ptr<Environment> inner, double sigma, std::uint64_t seed);

    std::span<const double> reset(Rng& rng) override;
    StepResult step(int action) override;
    int observation_dim() const override { return inner_->observation_dim(); }
    int action_count() const override { return inner_->action_count(); }
    int max_steps() const override { return inner_->max_steps(); }
    std::span<const std::string> observation_names() const override {
        return inner_->observation_names();
    }
    std::span<const std::string> action_names() const override { return inner_->action_names(); }

private:
    std::span<const double> apply(std::span<const double> clean);

    Environment* inner_;
    std::unique_ptr<Environment> owned_;
    double sigma_;
    Rng noise_rng_;
    std::vector<double> buffer_;
};

// Registry keyed by environment id: "cartpole", "mountaincar", "lunarlander".
std::unique_ptr<Environment> make_env(const std::string& id, int max_steps_override = 0);
bool is_known_env(const std::string& id);
// Fitness assigned to genotypes that fail to decode: a floor low enough to
// lose every selection in that environment.
double decode_failure_fitness(const std::string& id);

}  // namespace getree
