#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "merge/errors.hpp"
#include "merge/maddpg.hpp"
#include "support/gradient_check.hpp"

using namespace merge;
using namespace merge::maddpg;

namespace {

Hyperparameters small_hp() {
    Hyperparameters hp;
    hp.hidden1 = 8;
    hp.hidden2 = 8;
    return hp;
}

Observation make_obs(double seed) {
    Observation o;
    for (int i = 0; i < kStateDim; ++i) o[i] = seed + 0.1 * i;
    return o;
}

JointTransition make_transition(int n, double seed, bool done = false) {
    JointTransition t;
    for (int i = 0; i < n; ++i) {
        t.s.push_back(make_obs(seed + i));
        t.s2.push_back(make_obs(seed + i + 0.5));
        t.u.push_back(0.1 * (i + 1));
        t.r.push_back(seed * 0.01 + i);
    }
    t.done = done;
    return t;
}

// Overwrites a network so it outputs `value` for every input.
void make_constant(nn::Mlp& net, double value) {
    for (nn::Layer& l : net.layers) {
        std::fill(l.w.begin(), l.w.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
    }
    net.layers.back().b.back() = value;
}

bool same_params(const nn::Mlp& a, const nn::Mlp& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t l = 0; l < a.layers.size(); ++l)
        if (a.layers[l].w != b.layers[l].w || a.layers[l].b != b.layers[l].b) return false;
    return true;
}

}  // namespace

TEST_CASE("make_agents: dims follow the default architecture") {
    Rng rng(1);
    Hyperparameters hp;
    const auto agents = make_agents(3, hp, rng);
    REQUIRE(agents.size() == 3);
    for (const Agent& a : agents) {
        CHECK(a.actor.input_dim() == kStateDim);
        CHECK(a.actor.output_dim() == 1);
        CHECK(a.actor.layers[0].out == 64);
        CHECK(a.actor.layers.back().act == nn::Activation::Tanh);
        CHECK(a.critic.input_dim() == (kStateDim + kActionDim) * 3);  // 7N = 21
        CHECK(a.critic.layers.back().act == nn::Activation::Linear);
        CHECK(same_params(a.actor, a.target_actor));
        CHECK(same_params(a.critic, a.target_critic));
    }
}

TEST_CASE("act: tanh output maps affinely onto the control limits") {
    Rng rng(2);
    auto agents = make_agents(1, small_hp(), rng);
    const ActionScale scale{-3.0, 3.0};

    SUBCASE("zero raw output is zero control") {
        make_constant(agents[0].actor, 0.0);  // linear zero net, tanh(0)=0 upstream anyway
        CHECK(act(agents[0], make_obs(0.0), scale) == 0.0);
    }
    SUBCASE("saturated output hits u_max") {
        CHECK(scale.to_control(1.0) == 3.0);
        CHECK(scale.to_control(-1.0) == -3.0);
    }
    SUBCASE("asymmetric limits use the affine map") {
        const ActionScale a{-1.0, 3.0};
        CHECK(a.to_control(0.0) == doctest::Approx(1.0));
        CHECK(a.gain() == doctest::Approx(2.0));
    }
    SUBCASE("noise pushing past the limit is clamped to exactly u_max") {
        make_constant(agents[0].actor, 0.9);
        NoiseProcess huge(100.0, 1.0, 0.0);
        Rng noise_rng(3);
        for (int i = 0; i < 20; ++i) {
            const double u = act(agents[0], make_obs(0.0), scale, huge, noise_rng);
            CHECK(u <= scale.u_max);
            CHECK(u >= scale.u_min);
        }
    }
}

TEST_CASE("noise: sigma decays multiplicatively and respects the floor") {
    NoiseProcess noise(0.5, 0.9, 0.3);
    CHECK(noise.sigma() == 0.5);
    noise.end_episode();
    CHECK(noise.sigma() == doctest::Approx(0.45));
    for (int i = 0; i < 100; ++i) noise.end_episode();
    CHECK(noise.sigma() == 0.3);
}

TEST_CASE("replay buffer: FIFO eviction beyond capacity") {
    ReplayBuffer buf(2);
    buf.push(make_transition(1, 1.0));
    buf.push(make_transition(1, 2.0));
    buf.push(make_transition(1, 3.0));
    CHECK(buf.size() == 2);
    // Oldest (seed 1.0) evicted; remaining rewards stem from seeds 2 and 3.
    std::vector<double> rewards = {buf.at(0).r[0], buf.at(1).r[0]};
    std::sort(rewards.begin(), rewards.end());
    CHECK(rewards[0] == doctest::Approx(0.02));
    CHECK(rewards[1] == doctest::Approx(0.03));
}

TEST_CASE("replay buffer: sampling with replacement from a single item") {
    ReplayBuffer buf(8);
    buf.push(make_transition(1, 5.0));
    Rng rng(4);
    const Batch batch = buf.sample(4, rng);
    REQUIRE(batch.size() == 4);
    for (const JointTransition* t : batch) CHECK(t == &buf.at(0));
}

TEST_CASE("replay buffer: sampling from an empty buffer is refused") {
    ReplayBuffer buf(8);
    Rng rng(4);
    CHECK_THROWS_AS(buf.sample(1, rng), std::logic_error);
}

TEST_CASE("replay buffer: 100k draws from 10 items stay within 3 sigma of uniform") {
    ReplayBuffer buf(10);
    for (int i = 0; i < 10; ++i) buf.push(make_transition(1, static_cast<double>(i)));
    Rng rng(9);
    std::array<int, 10> counts{};
    constexpr int kDraws = 100000;
    for (int d = 0; d < kDraws; ++d) {
        const Batch batch = buf.sample(1, rng);
        for (int i = 0; i < 10; ++i)
            if (batch[0] == &buf.at(i)) ++counts[i];
    }
    const double expected = kDraws / 10.0;
    const double sigma = std::sqrt(kDraws * 0.1 * 0.9);
    for (int i = 0; i < 10; ++i) CHECK(std::abs(counts[i] - expected) <= 3.0 * sigma);
}

TEST_CASE("joint_input: fixed agent-order layout [s_1..s_N, u_1..u_N]") {
    std::vector<Observation> obs = {make_obs(1.0), make_obs(2.0)};
    std::vector<double> actions = {0.5, -0.5};
    const std::vector<double> x = joint_input(obs, actions);
    REQUIRE(x.size() == 14);
    CHECK(x[0] == obs[0][0]);
    CHECK(x[5] == obs[0][5]);
    CHECK(x[6] == obs[1][0]);
    CHECK(x[12] == 0.5);
    CHECK(x[13] == -0.5);

    // Permuting the agent order changes the joint vector.
    std::vector<Observation> swapped = {obs[1], obs[0]};
    std::vector<double> swapped_u = {actions[1], actions[0]};
    CHECK(joint_input(swapped, swapped_u) != x);
}

TEST_CASE("compute_target: reproduces the bootstrap rule") {
    Rng rng(5);
    auto agents = make_agents(2, small_hp(), rng);
    const ActionScale scale{-3.0, 3.0};
    for (Agent& a : agents) make_constant(a.target_critic, 2.0);

    JointTransition t = make_transition(2, 0.0);
    t.r = {1.0, 4.0};
    const Batch batch = {&t};

    SUBCASE("gamma = 0.99 bootstraps the target critic value") {
        const auto y = compute_target(agents, batch, 0.99, scale);
        CHECK(y[0][0] == doctest::Approx(1.0 + 0.99 * 2.0).epsilon(1e-12));  // 2.98
        CHECK(y[1][0] == doctest::Approx(4.0 + 0.99 * 2.0).epsilon(1e-12));
    }
    SUBCASE("terminal transitions reduce to the reward") {
        t.done = true;
        const auto y = compute_target(agents, batch, 0.99, scale);
        CHECK(y[0][0] == 1.0);
        CHECK(y[1][0] == 4.0);
    }
    SUBCASE("gamma = 0 reduces to the reward for all agents simultaneously") {
        const auto y = compute_target(agents, batch, 0.0, scale);
        CHECK(y[0][0] == 1.0);
        CHECK(y[1][0] == 4.0);
    }
}

TEST_CASE("update_critic: single-sample quadratic loss and descent") {
    Rng rng(6);
    auto agents = make_agents(2, small_hp(), rng);
    make_constant(agents[0].critic, 0.0);

    JointTransition t = make_transition(2, 0.0);
    const Batch batch = {&t};

    SUBCASE("critic already matching the target: zero loss, parameters untouched") {
        const nn::Mlp before = agents[0].critic;
        const std::vector<double> targets = {0.0};
        CHECK(update_critic(agents[0], batch, targets) == 0.0);
        CHECK(same_params(before, agents[0].critic));
    }
    SUBCASE("Q=0 against y=2 gives loss 4") {
        const std::vector<double> targets = {2.0};
        CHECK(update_critic(agents[0], batch, targets) == doctest::Approx(4.0).epsilon(1e-12));
    }
    SUBCASE("loss decreases over repeated updates on a frozen batch") {
        const std::vector<double> targets = {2.0};
        double prev = update_critic(agents[0], batch, targets);
        for (int i = 0; i < 50; ++i) {
            const double loss = update_critic(agents[0], batch, targets);
            CHECK(loss <= prev + 1e-12);
            prev = loss;
        }
        CHECK(prev < 4.0);
    }
}

TEST_CASE("update_actor: critic blind to the action slice gives exactly zero gradient") {
    Rng rng(7);
    auto agents = make_agents(2, small_hp(), rng);
    Agent& agent = agents[1];
    // Zero the first-layer weights reading agent 1's action input.
    nn::Layer& l0 = agent.critic.layers[0];
    const int action_col = 2 * kStateDim + agent.index;
    for (int r = 0; r < l0.out; ++r) l0.w[static_cast<std::size_t>(r) * l0.in + action_col] = 0.0;

    JointTransition t = make_transition(2, 0.3);
    const Batch batch = {&t};
    nn::Gradients grads = nn::Gradients::zeros_like(agent.actor);
    actor_objective_and_gradients(agent, batch, ActionScale{-3.0, 3.0}, grads);
    for (const auto& layer_grads : grads.w)
        for (double g : layer_grads) CHECK(g == 0.0);
    for (const auto& layer_grads : grads.b)
        for (double g : layer_grads) CHECK(g == 0.0);

    const nn::Mlp before = agent.actor;
    update_actor(agent, batch, ActionScale{-3.0, 3.0});
    CHECK(same_params(before, agent.actor));
}

TEST_CASE("update_actor: one small-step update never decreases the batch-mean Q") {
    Rng rng(8);
    Hyperparameters hp = small_hp();
    hp.actor_lr = 1e-6;
    auto agents = make_agents(2, hp, rng);
    std::vector<JointTransition> storage;
    for (int i = 0; i < 8; ++i) storage.push_back(make_transition(2, 0.2 * i));
    Batch batch;
    for (const auto& t : storage) batch.push_back(&t);

    const ActionScale scale{-3.0, 3.0};
    for (Agent& agent : agents) {
        const double before = actor_objective(agent, batch, scale);
        update_actor(agent, batch, scale);
        const double after = actor_objective(agent, batch, scale);
        CHECK(after >= before);
    }
}

TEST_CASE("update_actor: parameter gradients match finite differences of the objective") {
    Rng rng(12);
    auto agents = make_agents(2, small_hp(), rng);
    Agent& agent = agents[0];
    const ActionScale scale{-3.0, 3.0};

    std::vector<JointTransition> storage;
    for (int i = 0; i < 4; ++i) storage.push_back(make_transition(2, 0.17 * i));
    Batch batch;
    for (const auto& t : storage) batch.push_back(&t);

    nn::Gradients grads = nn::Gradients::zeros_like(agent.actor);
    actor_objective_and_gradients(agent, batch, scale, grads);

    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t l = 0; l < agent.actor.layers.size(); ++l) {
        auto check_slot = [&](double& slot, double analytic) {
            const double original = slot;
            slot = original + h;
            const double hi = actor_objective(agent, batch, scale);
            slot = original - h;
            const double lo = actor_objective(agent, batch, scale);
            slot = original;
            const double numeric = (hi - lo) / (2.0 * h);
            worst = std::max(worst, testsupport::rel_error(analytic, numeric));
        };
        for (std::size_t i = 0; i < agent.actor.layers[l].w.size(); ++i)
            check_slot(agent.actor.layers[l].w[i], grads.w[l][i]);
        for (std::size_t i = 0; i < agent.actor.layers[l].b.size(); ++i)
            check_slot(agent.actor.layers[l].b[i], grads.b[l][i]);
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("target networks lag the originals until update_targets runs") {
    Rng rng(13);
    auto agents = make_agents(2, small_hp(), rng);
    const nn::Mlp target_actor_before = agents[0].target_actor;
    const nn::Mlp target_critic_before = agents[0].target_critic;

    JointTransition t = make_transition(2, 0.4);
    const Batch batch = {&t};
    const std::vector<double> targets = {1.0};
    update_critic(agents[0], batch, targets);
    update_actor(agents[0], batch, ActionScale{-3.0, 3.0});
    CHECK(same_params(agents[0].target_actor, target_actor_before));
    CHECK(same_params(agents[0].target_critic, target_critic_before));
    CHECK_FALSE(same_params(agents[0].critic, agents[0].target_critic));

    update_targets(agents, 1.0);
    CHECK(same_params(agents[0].target_actor, agents[0].actor));
    CHECK(same_params(agents[0].target_critic, agents[0].critic));
}

TEST_CASE("full training step is bit-reproducible from (seed, buffer contents)") {
    const auto run_once = [](std::uint64_t seed) {
        Rng rng(seed);
        auto agents = make_agents(2, small_hp(), rng);
        ReplayBuffer buf(64);
        for (int i = 0; i < 32; ++i) buf.push(make_transition(2, 0.05 * i, i % 7 == 0));
        Rng sample_rng(seed + 1);
        const Batch batch = buf.sample(16, sample_rng);
        const ActionScale scale{-3.0, 3.0};
        const auto y = compute_target(agents, batch, 0.99, scale);
        for (int i = 0; i < 2; ++i) update_critic(agents[i], batch, y[i]);
        for (int i = 0; i < 2; ++i) update_actor(agents[i], batch, scale);
        update_targets(agents, 0.01);
        return agents;
    };
    const auto a = run_once(77);
    const auto b = run_once(77);
    for (int i = 0; i < 2; ++i) {
        CHECK(same_params(a[i].actor, b[i].actor));
        CHECK(same_params(a[i].critic, b[i].critic));
        CHECK(same_params(a[i].target_actor, b[i].target_actor));
        CHECK(same_params(a[i].target_critic, b[i].target_critic));
    }
}

TEST_CASE("agent checkpoints round-trip all four networks") {
    Rng rng(14);
    auto agents = make_agents(2, small_hp(), rng);
    const nlohmann::json doc = save_agent(agents[1]);
    const Agent loaded = load_agent(nlohmann::json::parse(doc.dump()), small_hp());
    CHECK(loaded.index == 1);
    CHECK(same_params(loaded.actor, agents[1].actor));
    CHECK(same_params(loaded.critic, agents[1].critic));
    CHECK(same_params(loaded.target_actor, agents[1].target_actor));
    CHECK(same_params(loaded.target_critic, agents[1].target_critic));
}
