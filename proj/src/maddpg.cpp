#include "merge/maddpg.hpp"

#include <cmath>
#include <stdexcept>

#include "merge/errors.hpp"

namespace merge::maddpg {

void Hyperparameters::validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("hyperparameters: require 0 <= gamma < 1");
    if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("hyperparameters: require 0 < tau <= 1");
    if (batch_size < 1) throw ConfigError("hyperparameters: require batch_size >= 1");
    if (buffer_capacity < 1) throw ConfigError("hyperparameters: require buffer_capacity >= 1");
    if (warmup_steps < 0) throw ConfigError("hyperparameters: require warmup_steps >= 0");
    if (update_every < 1) throw ConfigError("hyperparameters: require update_every >= 1");
    if (noise_sigma0 < 0.0 || noise_floor < 0.0)
        throw ConfigError("hyperparameters: noise scales must be non-negative");
    if (!(noise_decay > 0.0 && noise_decay <= 1.0))
        throw ConfigError("hyperparameters: require 0 < noise_decay <= 1");
    if (!(actor_lr > 0.0 && critic_lr > 0.0))
        throw ConfigError("hyperparameters: learning rates must be positive");
    if (hidden1 < 1 || hidden2 < 1)
        throw ConfigError("hyperparameters: hidden widths must be positive");
}

std::vector<Agent> make_agents(int n_agents, const Hyperparameters& hp, Rng& rng) {
    if (n_agents < 1) throw ConfigError("make_agents: need at least one agent");
    hp.validate();
    const std::vector<int> actor_dims = {kStateDim, hp.hidden1, hp.hidden2, 1};
    const std::vector<int> critic_dims = {(kStateDim + kActionDim) * n_agents, hp.hidden1,
                                          hp.hidden2, 1};
    const std::vector<nn::Activation> actor_acts = {nn::Activation::Relu, nn::Activation::Relu,
                                                    nn::Activation::Tanh};
    const std::vector<nn::Activation> critic_acts = {nn::Activation::Relu, nn::Activation::Relu,
                                                     nn::Activation::Linear};
    const nn::InitSpec init = nn::table_init();

    std::vector<Agent> agents;
    agents.reserve(n_agents);
    for (int i = 0; i < n_agents; ++i) {
        Agent a;
        a.index = i;
        a.actor = nn::mlp_init(actor_dims, actor_acts, init, rng);
        a.critic = nn::mlp_init(critic_dims, critic_acts, init, rng);
        a.target_actor = a.actor;
        a.target_critic = a.critic;
        a.actor_opt = nn::AdamState::for_net(a.actor, hp.actor_lr);
        a.critic_opt = nn::AdamState::for_net(a.critic, hp.critic_lr);
        agents.push_back(std::move(a));
    }
    return agents;
}

nlohmann::json save_agent(const Agent& agent) {
    return {{"index", agent.index},
            {"actor", nn::save_checkpoint(agent.actor)},
            {"critic", nn::save_checkpoint(agent.critic)},
            {"target_actor", nn::save_checkpoint(agent.target_actor)},
            {"target_critic", nn::save_checkpoint(agent.target_critic)}};
}

Agent load_agent(const nlohmann::json& doc, const Hyperparameters& hp) {
    try {
        Agent a;
        a.index = doc.at("index").get<int>();
        a.actor = nn::load_checkpoint(doc.at("actor"));
        a.critic = nn::load_checkpoint(doc.at("critic"));
        a.target_actor = nn::load_checkpoint(doc.at("target_actor"));
        a.target_critic = nn::load_checkpoint(doc.at("target_critic"));
        a.actor_opt = nn::AdamState::for_net(a.actor, hp.actor_lr);
        a.critic_opt = nn::AdamState::for_net(a.critic, hp.critic_lr);
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("agent checkpoint: malformed document: ") + e.what());
    }
}

double act(const nn::Mlp& actor, const Observation& obs, const ActionScale& scale) {
    const std::vector<double> out = nn::forward(actor, obs);
    return scale.to_control(out[0]);
}

double act(const Agent& agent, const Observation& obs, const ActionScale& scale) {
    return act(agent.actor, obs, scale);
}

double act(const Agent& agent, const Observation& obs, const ActionScale& scale,
           const NoiseProcess& noise, Rng& rng) {
    return scale.clamp(act(agent.actor, obs, scale) + noise.sample(rng));
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ < 1) throw ConfigError("replay buffer: capacity must be >= 1");
}

void ReplayBuffer::push(JointTransition t) {
    if (items_.size() < capacity_) {
        items_.push_back(std::move(t));
    } else {
        items_[next_] = std::move(t);  // overwrite the oldest entry
    }
    next_ = (next_ + 1) % capacity_;
}

std::vector<const JointTransition*> ReplayBuffer::sample(int n, Rng& rng) const {
    if (items_.empty()) throw std::logic_error("replay buffer: cannot sample from empty buffer");
    std::vector<const JointTransition*> batch(n);
    for (int i = 0; i < n; ++i) batch[i] = &items_[rng.index(items_.size())];
    return batch;
}

std::vector<double> joint_input(std::span<const Observation> obs, std::span<const double> actions) {
    std::vector<double> x;
    x.reserve(obs.size() * kStateDim + actions.size());
    for (const Observation& o : obs) x.insert(x.end(), o.begin(), o.end());
    x.insert(x.end(), actions.begin(), actions.end());
    return x;
}

std::vector<std::vector<double>> compute_target(std::span<const Agent> agents, const Batch& batch,
                                                double gamma, const ActionScale& scale) {
    const std::size_t n = agents.size();
    std::vector<std::vector<double>> y(n, std::vector<double>(batch.size()));
    std::vector<double> next_actions(n);
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const JointTransition& t = *batch[b];
        for (std::size_t i = 0; i < n; ++i)
            next_actions[i] = act(agents[i].target_actor, t.s2[i], scale);
        const std::vector<double> x = joint_input(t.s2, next_actions);
        const double mask = t.done ? 0.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double q_next = nn::forward(agents[i].target_critic, x)[0];
            y[i][b] = t.r[i] + gamma * mask * q_next;
        }
    }
    return y;
}

double update_critic(Agent& agent, const Batch& batch, std::span<const double> targets) {
    if (batch.empty() || targets.size() != batch.size())
        throw std::invalid_argument("update_critic: batch/target size mismatch");

    nn::Gradients grads = nn::Gradients::zeros_like(agent.critic);
    nn::ForwardCache cache;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const JointTransition& t = *batch[b];
        const std::vector<double> x = joint_input(t.s, t.u);
        const double q = nn::forward(agent.critic, x, cache)[0];
        const double err = q - targets[b];
        loss += err * err * inv_b;
        const double dy = 2.0 * err * inv_b;
        nn::backward(agent.critic, cache, std::span<const double>(&dy, 1), grads);
    }
    nn::adam_step(agent.critic, grads, agent.critic_opt);
    return loss;
}

double actor_objective(const Agent& agent, const Batch& batch, const ActionScale& scale) {
    double mean_q = 0.0;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    std::vector<double> actions;
    for (const JointTransition* t : batch) {
        actions.assign(t->u.begin(), t->u.end());
        actions[agent.index] = act(agent.actor, t->s[agent.index], scale);
        const std::vector<double> x = joint_input(t->s, actions);
        mean_q += nn::forward(agent.critic, x)[0] * inv_b;
    }
    return mean_q;
}

double actor_objective_and_gradients(const Agent& agent, const Batch& batch,
                                     const ActionScale& scale, nn::Gradients& grads) {
    if (batch.empty()) throw std::invalid_argument("update_actor: empty batch");
    const std::size_t n = batch.front()->s.size();
    const std::size_t action_pos = n * kStateDim + static_cast<std::size_t>(agent.index);
    const double inv_b = 1.0 / static_cast<double>(batch.size());

    nn::ForwardCache actor_cache, critic_cache;
    std::vector<double> actions;
    double mean_q = 0.0;
    for (const JointTransition* t : batch) {
        const double raw = nn::forward(agent.actor, t->s[agent.index], actor_cache)[0];
        actions.assign(t->u.begin(), t->u.end());
        actions[agent.index] = scale.to_control(raw);
        const std::vector<double> x = joint_input(t->s, actions);
        const double q = nn::forward(agent.critic, x, critic_cache)[0];
        mean_q += q * inv_b;

        const double dq = inv_b;  // d(mean Q)/dQ_b
        const std::vector<double> dx =
            nn::input_gradient(agent.critic, critic_cache, std::span<const double>(&dq, 1));
        const double d_raw = dx[action_pos] * scale.gain();
        nn::backward(agent.actor, actor_cache, std::span<const double>(&d_raw, 1), grads);
    }
    return mean_q;
}

double update_actor(Agent& agent, const Batch& batch, const ActionScale& scale) {
    nn::Gradients grads = nn::Gradients::zeros_like(agent.actor);
    const double mean_q = actor_objective_and_gradients(agent, batch, scale, grads);
    grads.scale(-1.0);  // ascent on the objective; Adam descends
    nn::adam_step(agent.actor, grads, agent.actor_opt);
    return mean_q;
}

void update_targets(std::span<Agent> agents, double tau) {
    for (Agent& a : agents) {
        nn::polyak_update(a.target_actor, a.actor, tau);
        nn::polyak_update(a.target_critic, a.critic, tau);
    }
}

}  // namespace merge::maddpg
