#include "getree/envs.hpp"

#include <cmath>
#include <stdexcept>

namespace getree {

namespace {

const std::vector<std::string> kCartPoleObs = {"x", "v", "theta", "omega"};
const std::vector<std::string> kCartPoleActions = {"move_left", "move_right"};
const std::vector<std::string> kMountainCarObs = {"x", "v"};
const std::vector<std::string> kMountainCarActions = {"acc_left", "no_acc", "acc_right"};
const std::vector<std::string> kLanderObs = {"p_x", "p_y", "v_x", "v_y",
                                             "theta", "omega", "c_l", "c_r"};
const std::vector<std::string> kLanderActions = {"nop", "left", "main", "right"};

[[noreturn]] void step_after_done() { throw std::logic_error("step() after episode end"); }

void check_action(int action, int count) {
    if (action < 0 || action >= count) throw std::invalid_argument("action id out of range");
}

}  // namespace

// ---- CartPole ----------------------------------------------------------------

std::span<const double> CartPoleEnv::reset(Rng& rng) {
    for (double& v : state_) v = rng.uniform(-0.05, 0.05);
    steps_ = 0;
    done_ = false;
    return state_;
}

StepResult CartPoleEnv::step(int action) {
    if (done_) step_after_done();
    check_action(action, 2);
    auto [x, v, theta, omega] = state_;
    const double force = action == 1 ? kForce : -kForce;
    const double cos_t = std::cos(theta);
    const double sin_t = std::sin(theta);
    const double total_mass = kCartMass + kPoleMass;
    const double polemass_length = kPoleMass * kPoleHalfLength;
    const double temp = (force + polemass_length * omega * omega * sin_t) / total_mass;
    const double theta_acc =
        (kGravity * sin_t - cos_t * temp) /
        (kPoleHalfLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / total_mass));
    const double x_acc = temp - polemass_length * theta_acc * cos_t / total_mass;
    // explicit Euler: positions advance with the old derivatives
    state_[0] = x + kTau * v;
    state_[1] = v + kTau * x_acc;
    state_[2] = theta + kTau * omega;
    state_[3] = omega + kTau * theta_acc;
    ++steps_;

    StepResult result;
    result.reward = 1.0;
    const bool fell = state_[0] < -kXThreshold || state_[0] > kXThreshold ||
                      state_[2] < -kThetaThreshold || state_[2] > kThetaThreshold;
    if (fell) {
        result.info = "pole_fell";
        done_ = true;
    } else if (steps_ >= max_steps_) {
        result.info = "timeout";
        done_ = true;
    }
    result.done = done_;
    result.observation = state_;
    return result;
}

std::span<const std::string> CartPoleEnv::observation_names() const { return kCartPoleObs; }
std::span<const std::string> CartPoleEnv::action_names() const { return kCartPoleActions; }

void CartPoleEnv::set_state(double x, double v, double theta, double omega) {
    state_ = {x, v, theta, omega};
    steps_ = 0;
    done_ = false;
}

// ---- MountainCar ---------------------------------------------------------------

std::span<const double> MountainCarEnv::reset(Rng& rng) {
    state_[0] = rng.uniform(-0.6, -0.4);
    state_[1] = 0.0;
    steps_ = 0;
    done_ = false;
    return state_;
}

StepResult MountainCarEnv::step(int action) {
    if (done_) step_after_done();
    check_action(action, 3);
    double v = state_[1] + (action - 1) * kForce - kGravity * std::cos(3.0 * state_[0]);
    v = std::clamp(v, -kMaxV, kMaxV);
    double x = std::clamp(state_[0] + v, kMinX, kMaxX);
    if (x == kMinX && v < 0.0) v = 0.0;  // inelastic left wall
    state_ = {x, v};
    ++steps_;

    StepResult result;
    result.reward = -1.0;
    if (x >= kGoalX) {
        result.info = "goal";
        done_ = true;
    } else if (steps_ >= max_steps_) {
        result.info = "timeout";
        done_ = true;
    }
    result.done = done_;
    result.observation = state_;
    return result;
}

std::span<const std::string> MountainCarEnv::observation_names() const { return kMountainCarObs; }
std::span<const std::string> MountainCarEnv::action_names() const { return kMountainCarActions; }

void MountainCarEnv::set_state(double x, double v) {
    state_ = {x, v};
    steps_ = 0;
    done_ = false;
}

// ---- LunarLander ---------------------------------------------------------------

double LunarLanderEnv::potential(const State& s) {
    return -100.0 * std::sqrt(s.x * s.x + s.y * s.y) -
           100.0 * std::sqrt(s.vx * s.vx + s.vy * s.vy) - 100.0 * std::abs(s.theta) +
           10.0 * (s.left_contact ? 1.0 : 0.0) + 10.0 * (s.right_contact ? 1.0 : 0.0);
}

void LunarLanderEnv::refresh_observation() {
    obs_ = {state_.x,     state_.y,     state_.vx,
            state_.vy,    state_.theta, state_.omega,
            state_.left_contact ? 1.0 : 0.0, state_.right_contact ? 1.0 : 0.0};
}

std::span<const double> LunarLanderEnv::reset(Rng& rng) {
    state_ = State{};
    state_.y = kStartAltitude;
    state_.vx = rng.uniform(-0.2, 0.2);
    state_.vy = rng.uniform(-0.2, 0.0);
    state_.theta = rng.uniform(-0.15, 0.15);
    state_.omega = rng.uniform(-0.1, 0.1);
    steps_ = 0;
    done_ = false;
    last_step_ = StepBreakdown{};
    refresh_observation();
    return obs_;
}

StepResult LunarLanderEnv::step(int action) {
    if (done_) step_after_done();
    check_action(action, 4);
    const double before = potential(state_);

    double ax = 0.0, ay = -kGravity, aw = 0.0, fuel = 0.0;
    const double cos_t = std::cos(state_.theta);
    const double sin_t = std::sin(state_.theta);
    switch (action) {
        case 1:  // left engine: pushes body-right, rotates counterclockwise
            ax += kSideAccel * cos_t;
            ay += kSideAccel * sin_t;
            aw += kTorque;
            fuel = kSideCost;
            break;
        case 2:  // main engine: thrust along the body axis
            ax += kMainAccel * -sin_t;
            ay += kMainAccel * cos_t;
            fuel = kMainCost;
            break;
        case 3:  // right engine
            ax -= kSideAccel * cos_t;
            ay -= kSideAccel * sin_t;
            aw -= kTorque;
            fuel = kSideCost;
            break;
        default:
            break;
    }
    state_.vx += ax * kTau;
    state_.vy += ay * kTau;
    state_.omega += aw * kTau;
    state_.x += state_.vx * kTau;
    state_.y += state_.vy * kTau;
    state_.theta += state_.omega * kTau;
    ++steps_;

    double terminal_bonus = 0.0;
    std::string_view info;
    state_.left_contact = false;
    state_.right_contact = false;

    const auto leg_tips = [this]() {
        const double c = std::cos(state_.theta), s = std::sin(state_.theta);
        const double left = state_.y - kLegSpan * s - kLegHeight * c;
        const double right = state_.y + kLegSpan * s - kLegHeight * c;
        return std::pair{left, right};
    };

    auto [left_tip, right_tip] = leg_tips();
    if (state_.y <= 0.0) {
        info = "crash";
    } else if (left_tip <= 0.0 || right_tip <= 0.0) {
        if (std::abs(state_.vy) > kCrashSpeed || std::abs(state_.theta) > kCrashTilt) {
            info = "crash";
        } else {
            // gentle contact: plant the legs and settle the attitude
            if (!(left_tip <= 0.0 && right_tip <= 0.0)) state_.theta *= 0.8;
            std::tie(left_tip, right_tip) = leg_tips();
            state_.y -= std::min(left_tip, right_tip);
            state_.vx = 0.0;
            state_.vy = 0.0;
            state_.omega = 0.0;
            std::tie(left_tip, right_tip) = leg_tips();
            state_.left_contact = left_tip <= 1e-9;
            state_.right_contact = right_tip <= 1e-9;
            if (state_.left_contact && state_.right_contact &&
                std::abs(state_.theta) <= kRestTilt) {
                info = "landed";
                terminal_bonus = 100.0;
            }
        }
    }
    if (info == "crash") {
        terminal_bonus = -100.0;
    } else if (info.empty() && std::abs(state_.x) >= kXBound) {
        info = "out_of_bounds";
        terminal_bonus = -100.0;
    }
    if (info.empty() && steps_ >= max_steps_) info = "timeout";
    done_ = !info.empty();

    refresh_observation();
    const double after = potential(state_);
    last_step_ = StepBreakdown{after - before, fuel, terminal_bonus};

    StepResult result;
    result.observation = obs_;
    result.reward = (after - before) - fuel + terminal_bonus;
    result.done = done_;
    result.info = info;
    return result;
}

std::span<const std::string> LunarLanderEnv::observation_names() const { return kLanderObs; }
std::span<const std::string> LunarLanderEnv::action_names() const { return kLanderActions; }

void LunarLanderEnv::set_state(const State& s) {
    state_ = s;
    steps_ = 0;
    done_ = false;
    refresh_observation();
}

// ---- noise wrapper ------------------------------------------------------------

NoisyObservationEnv::NoisyObservationEnv(Environment& inner, double sigma, std::uint64_t seed)
    : inner_(&inner), sigma_(sigma), noise_rng_(seed) {
    if (sigma < 0.0) throw std::invalid_argument("noise sigma must be >= 0");
}

NoisyObservationEnv::NoisyObservationEnv(std::unique_ptr<Environment> inner, double sigma,
                                         std::uint64_t seed)
    : inner_(inner.get()), owned_(std::move(inner)), sigma_(sigma), noise_rng_(seed) {
    if (sigma < 0.0) throw std::invalid_argument("noise sigma must be >= 0");
}

std::span<const double> NoisyObservationEnv::apply(std::span<const double> clean) {
    if (sigma_ == 0.0) return clean;
    buffer_.assign(clean.begin(), clean.end());
    for (double& v : buffer_) v += sigma_ * noise_rng_.gaussian();
    return buffer_;
}

std::span<const double> NoisyObservationEnv::reset(Rng& rng) { return apply(inner_->reset(rng)); }

StepResult NoisyObservationEnv::step(int action) {
    StepResult result = inner_->step(action);
    result.observation = apply(result.observation);
    return result;
}

// ---- registry -------------------------------------------------------------------

std::unique_ptr<Environment> make_env(const std::string& id, int max_steps_override) {
    if (id == "cartpole")
        return std::make_unique<CartPoleEnv>(max_steps_override > 0 ? max_steps_override : 500);
    if (id == "mountaincar")
        return std::make_unique<MountainCarEnv>(max_steps_override > 0 ? max_steps_override : 200);
    if (id == "lunarlander")
        return std::make_unique<LunarLanderEnv>(max_steps_override > 0 ? max_steps_override : 1000);
    throw std::invalid_argument("unknown environment id: " + id);
}

bool is_known_env(const std::string& id) {
    return id == "cartpole" || id == "mountaincar" || id == "lunarlander";
}

double decode_failure_fitness(const std::string& id) {
    if (id == "cartpole") return 0.0;
    if (id == "mountaincar") return -200.0;
    if (id == "lunarlander") return -1000.0;
    throw std::invalid_argument("unknown environment id: " + id);
}

}  // namespace getree
