#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "merge/env.hpp"
#include "merge/nn.hpp"
#include "merge/rng.hpp"

namespace merge::maddpg {

inline constexpr int kActionDim = 1;

struct Hyperparameters {
    double gamma = 0.99;
    double tau = 0.01;
    int batch_size = 64;
    std::size_t buffer_capacity = 1000000;
    int warmup_steps = 1000;
    int update_every = 1;  // env steps between update rounds
    double noise_sigma0 = 0.5;
    double noise_decay = 0.999;
    double noise_floor = 0.02;
    double actor_lr = 1e-3;
    double critic_lr = 1e-3;
    int hidden1 = 64;
    int hidden2 = 64;

    void validate() const;
};

// Affine map from the actor's tanh output in (-1, 1) onto [u_min, u_max].
struct ActionScale {
    double u_min = -3.0;
    double u_max = 3.0;

    double to_control(double raw) const {
        return u_min + (raw + 1.0) * 0.5 * (u_max - u_min);
    }
    double gain() const { return 0.5 * (u_max - u_min); }
    double clamp(double u) const { return std::min(std::max(u, u_min), u_max); }
};

// One learner: decentralized actor over its own observation, centralized
// critic over the joint observation-action vector, plus slow target copies.
struct Agent {
    int index = 0;
    nn::Mlp actor;
    nn::Mlp critic;
    nn::Mlp target_actor;
    nn::Mlp target_critic;
    nn::AdamState actor_opt;
    nn::AdamState critic_opt;
};

// Builds n agents with the default layer sizes and init bounds; targets start as
// exact copies of the originals. Critic input width is (s_dim + u_dim) * n.
std::vector<Agent> make_agents(int n_agents, const Hyperparameters& hp, Rng& rng);

nlohmann::json save_agent(const Agent& agent);
Agent load_agent(const nlohmann::json& doc, const Hyperparameters& hp);

// Gaussian exploration noise with multiplicative per-episode decay.
class NoiseProcess {
public:
    NoiseProcess(double sigma0, double decay, double floor)
        : sigma_(sigma0), decay_(decay), floor_(floor) {}

    double sample(Rng& rng) const { return rng.normal(0.0, sigma_); }
    void end_episode() { sigma_ = std::max(floor_, sigma_ * decay_); }
    double sigma() const { return sigma_; }

private:
    double sigma_;
    double decay_;
    double floor_;
};

// Deterministic policy action in m/s^2.
double act(const nn::Mlp& actor, const Observation& obs, const ActionScale& scale);
double act(const Agent& agent, const Observation& obs, const ActionScale& scale);
// Exploratory variant: noise is added after scaling, then clamped.
double act(const Agent& agent, const Observation& obs, const ActionScale& scale,
           const NoiseProcess& noise, Rng& rng);

struct JointTransition {
    std::vector<Observation> s;
    std::vector<double> u;  // executed controls, m/s^2
    std::vector<double> r;
    std::vector<Observation> s2;
    bool done = false;
};

// Bounded FIFO store sampled uniformly with replacement.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(JointTransition t);
    std::vector<const JointTransition*> sample(int n, Rng& rng) const;
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    const JointTransition& at(std::size_t i) const { return items_[i]; }

private:
    std::vector<JointTransition> items_;
    std::size_t capacity_;
    std::size_t next_ = 0;
};

using Batch = std::vector<const JointTransition*>;

// Fixed-layout centralized critic input [s_1..s_N, u_1..u_N].
std::vector<double> joint_input(std::span<const Observation> obs, std::span<const double> actions);

// TD targets y[agent][sample]: next joint actions come from the target
// actors, values from the target critics; bootstrap is masked at terminals.
std::vector<std::vector<double>> compute_target(std::span<const Agent> agents, const Batch& batch,
                                                double gamma, const ActionScale& scale);

// One Adam step on the critic against detached targets; returns the pre-step
// mean-squared TD error. Critic inputs are the stored executed actions.
double update_critic(Agent& agent, const Batch& batch, std::span<const double> targets);

// Batch-mean critic value with the agent's own action slot replaced by its
// current policy; gradients flow through the critic's action input and the
// scaling map into the actor parameters.
double actor_objective(const Agent& agent, const Batch& batch, const ActionScale& scale);
double actor_objective_and_gradients(const Agent& agent, const Batch& batch,
                                     const ActionScale& scale, nn::Gradients& grads);

// One ascent step on the objective above; returns the pre-step batch-mean Q.
double update_actor(Agent& agent, const Batch& batch, const ActionScale& scale);

// Polyak step on every agent's target actor and target critic.
void update_targets(std::span<Agent> agents, double tau);

}  // namespace merge::maddpg
