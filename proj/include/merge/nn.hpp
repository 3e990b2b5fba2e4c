#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "merge/rng.hpp"

namespace merge::nn {

enum class Activation { Relu, Tanh, Linear };

std::string to_string(Activation a);
Activation activation_from_name(const std::string& name);

struct Layer {
    int in = 0;
    int out = 0;
    std::vector<double> w;  // row-major, `out` rows of length `in`
    std::vector<double> b;  // length `out`
    Activation act = Activation::Linear;
};

struct Mlp {
    std::vector<Layer> layers;

    int input_dim() const { return layers.empty() ? 0 : layers.front().in; }
    int output_dim() const { return layers.empty() ? 0 : layers.back().out; }
    std::size_t param_count() const;
};

// Per-layer uniform initialization bounds; weights and biases of layer l are
// drawn i.i.d. from U(-bounds[l], bounds[l]).
struct InitSpec {
    std::vector<double> bounds;
};

// Default uniform bounds for the three-layer networks: 1, 1, 3e-3.
InitSpec table_init(std::size_t n_layers = 3);

// dims = {in, hidden..., out}; acts has one tag per layer.
Mlp mlp_init(const std::vector<int>& dims, const std::vector<Activation>& acts,
             const InitSpec& init, Rng& rng);

// Stored intermediates of one forward pass: x[0] is the input, x[l+1] the
// activation output of layer l, z[l] its pre-activation.
struct ForwardCache {
    std::vector<std::vector<double>> x;
    std::vector<std::vector<double>> z;
};

std::vector<double> forward(const Mlp& net, std::span<const double> input);
std::vector<double> forward(const Mlp& net, std::span<const double> input, ForwardCache& cache);

// Parameter gradients with the same shapes as the network.
struct Gradients {
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> b;

    static Gradients zeros_like(const Mlp& net);
    void zero();
    void scale(double factor);
};

// Reverse pass for the scalar objective dy . y. Accumulates parameter
// gradients into `grads` (callers zero or keep running sums) and returns the
// gradient with respect to the input.
std::vector<double> backward(const Mlp& net, const ForwardCache& cache,
                             std::span<const double> dy, Gradients& grads);

// Input gradient only; identical arithmetic to backward's dx path.
std::vector<double> input_gradient(const Mlp& net, const ForwardCache& cache,
                                   std::span<const double> dy);

// Bias-corrected Adam. `grads` must point in the descent direction of the
// caller's loss; the step counter advances once per adam_step call.
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step_count = 0;
    std::vector<std::vector<double>> m_w, v_w, m_b, v_b;

    static AdamState for_net(const Mlp& net, double lr);
};

void adam_step(Mlp& net, const Gradients& grads, AdamState& state);

// target <- tau * source + (1 - tau) * target, per parameter.
void polyak_update(Mlp& target, const Mlp& source, double tau);

// Portable JSON checkpoint; round-trips forward outputs bit-exactly.
nlohmann::json save_checkpoint(const Mlp& net);
Mlp load_checkpoint(const nlohmann::json& doc);

}  // namespace merge::nn
