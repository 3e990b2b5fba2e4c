#include "merge/nn.hpp"

#include <cmath>
#include <stdexcept>

#include "merge/errors.hpp"

namespace merge::nn {

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Linear: return "linear";
    }
    return "linear";
}

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::Relu;
    if (name == "tanh") return Activation::Tanh;
    if (name == "linear") return Activation::Linear;
    throw ConfigError("unknown activation tag: " + name);
}

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers) n += l.w.size() + l.b.size();
    return n;
}

InitSpec table_init(std::size_t n_layers) {
    InitSpec spec;
    spec.bounds.assign(n_layers, 1.0);
    if (!spec.bounds.empty()) spec.bounds.back() = 3e-3;
    return spec;
}

Mlp mlp_init(const std::vector<int>& dims, const std::vector<Activation>& acts,
             const InitSpec& init, Rng& rng) {
    if (dims.size() < 2) throw ConfigError("mlp_init: need at least input and output dims");
    const std::size_t n_layers = dims.size() - 1;
    if (acts.size() != n_layers)
        throw ConfigError("mlp_init: expected one activation per layer");
    if (init.bounds.size() != n_layers)
        throw ConfigError("mlp_init: expected one init bound per layer");

    Mlp net;
    net.layers.resize(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        Layer& layer = net.layers[l];
        layer.in = dims[l];
        layer.out = dims[l + 1];
        if (layer.in <= 0 || layer.out <= 0)
            throw ConfigError("mlp_init: layer dims must be positive");
        layer.act = acts[l];
        const double bound = init.bounds[l];
        layer.w.resize(static_cast<std::size_t>(layer.in) * layer.out);
        layer.b.resize(layer.out);
        for (double& p : layer.w) p = rng.uniform(-bound, bound);
        for (double& p : layer.b) p = rng.uniform(-bound, bound);
    }
    return net;
}

namespace {

inline double activate(double z, Activation a) {
    switch (a) {
        case Activation::Relu: return z > 0.0 ? z : 0.0;
        case Activation::Tanh: return std::tanh(z);
        case Activation::Linear: return z;
    }
    return z;
}

// Derivative expressed through the activation output (exact for all three tags).
inline double activate_grad(double z, double a_out, Activation a) {
    switch (a) {
        case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: return 1.0 - a_out * a_out;
        case Activation::Linear: return 1.0;
    }
    return 1.0;
}

void affine_forward(const Layer& layer, const std::vector<double>& x, std::vector<double>& z) {
    z.resize(layer.out);
    const double* w = layer.w.data();
    for (int r = 0; r < layer.out; ++r) {
        const double* row = w + static_cast<std::size_t>(r) * layer.in;
        double acc = layer.b[r];
        for (int c = 0; c < layer.in; ++c) acc += row[c] * x[c];
        z[r] = acc;
    }
}

std::vector<double> backward_impl(const Mlp& net, const ForwardCache& cache,
                                  std::span<const double> dy, Gradients* grads) {
    const std::size_t n_layers = net.layers.size();
    if (cache.z.size() != n_layers || cache.x.size() != n_layers + 1)
        throw std::invalid_argument("backward: cache does not match this network");
    if (static_cast<int>(dy.size()) != net.output_dim())
        throw std::invalid_argument("backward: dy size does not match output dim");

    std::vector<double> delta(dy.begin(), dy.end());
    std::vector<double> dz, dx;
    for (std::size_t li = n_layers; li-- > 0;) {
        const Layer& layer = net.layers[li];
        const std::vector<double>& x_in = cache.x[li];
        const std::vector<double>& z = cache.z[li];
        const std::vector<double>& a_out = cache.x[li + 1];

        dz.resize(layer.out);
        for (int r = 0; r < layer.out; ++r)
            dz[r] = delta[r] * activate_grad(z[r], a_out[r], layer.act);

        if (grads) {
            std::vector<double>& gw = grads->w[li];
            std::vector<double>& gb = grads->b[li];
            for (int r = 0; r < layer.out; ++r) {
                double* grow = gw.data() + static_cast<std::size_t>(r) * layer.in;
                const double d = dz[r];
                for (int c = 0; c < layer.in; ++c) grow[c] += d * x_in[c];
                gb[r] += d;
            }
        }

        dx.assign(layer.in, 0.0);
        for (int r = 0; r < layer.out; ++r) {
            const double* row = layer.w.data() + static_cast<std::size_t>(r) * layer.in;
            const double d = dz[r];
            for (int c = 0; c < layer.in; ++c) dx[c] += row[c] * d;
        }
        delta = dx;
    }
    return delta;
}

}  // namespace

std::vector<double> forward(const Mlp& net, std::span<const double> input) {
    ForwardCache cache;
    return forward(net, input, cache);
}

std::vector<double> forward(const Mlp& net, std::span<const double> input, ForwardCache& cache) {
    if (static_cast<int>(input.size()) != net.input_dim())
        throw std::invalid_argument("forward: input size does not match network input dim");
    const std::size_t n_layers = net.layers.size();
    cache.x.resize(n_layers + 1);
    cache.z.resize(n_layers);
    cache.x[0].assign(input.begin(), input.end());
    for (std::size_t l = 0; l < n_layers; ++l) {
        const Layer& layer = net.layers[l];
        affine_forward(layer, cache.x[l], cache.z[l]);
        cache.x[l + 1].resize(layer.out);
        for (int r = 0; r < layer.out; ++r)
            cache.x[l + 1][r] = activate(cache.z[l][r], layer.act);
    }
    return cache.x[n_layers];
}

Gradients Gradients::zeros_like(const Mlp& net) {
    Gradients g;
    g.w.resize(net.layers.size());
    g.b.resize(net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        g.w[l].assign(net.layers[l].w.size(), 0.0);
        g.b[l].assign(net.layers[l].b.size(), 0.0);
    }
    return g;
}

void Gradients::zero() {
    for (auto& v : w) std::fill(v.begin(), v.end(), 0.0);
    for (auto& v : b) std::fill(v.begin(), v.end(), 0.0);
}

void Gradients::scale(double factor) {
    for (auto& v : w)
        for (double& g : v) g *= factor;
    for (auto& v : b)
        for (double& g : v) g *= factor;
}

std::vector<double> backward(const Mlp& net, const ForwardCache& cache,
                             std::span<const double> dy, Gradients& grads) {
    if (grads.w.size() != net.layers.size())
        throw std::invalid_argument("backward: gradient shapes do not match network");
    return backward_impl(net, cache, dy, &grads);
}

std::vector<double> input_gradient(const Mlp& net, const ForwardCache& cache,
                                   std::span<const double> dy) {
    return backward_impl(net, cache, dy, nullptr);
}

AdamState AdamState::for_net(const Mlp& net, double lr_) {
    AdamState s;
    s.lr = lr_;
    s.m_w.resize(net.layers.size());
    s.v_w.resize(net.layers.size());
    s.m_b.resize(net.layers.size());
    s.v_b.resize(net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        s.m_w[l].assign(net.layers[l].w.size(), 0.0);
        s.v_w[l].assign(net.layers[l].w.size(), 0.0);
        s.m_b[l].assign(net.layers[l].b.size(), 0.0);
        s.v_b[l].assign(net.layers[l].b.size(), 0.0);
    }
    return s;
}

namespace {

void adam_update_span(std::span<double> params, std::span<const double> grads,
                      std::span<double> m, std::span<double> v, const AdamState& s,
                      double bc1, double bc2) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * grads[i];
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * grads[i] * grads[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        params[i] -= s.lr * m_hat / (std::sqrt(v_hat) + s.eps);
    }
}

}  // namespace

void adam_step(Mlp& net, const Gradients& grads, AdamState& state) {
    if (state.m_w.size() != net.layers.size() || grads.w.size() != net.layers.size())
        throw std::invalid_argument("adam_step: state/gradient shapes do not match network");
    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        if (grads.w[l].size() != net.layers[l].w.size() ||
            grads.b[l].size() != net.layers[l].b.size())
            throw std::invalid_argument("adam_step: gradient shapes do not match network");
        adam_update_span(net.layers[l].w, grads.w[l], state.m_w[l], state.v_w[l], state, bc1, bc2);
        adam_update_span(net.layers[l].b, grads.b[l], state.m_b[l], state.v_b[l], state, bc1, bc2);
    }
}

void polyak_update(Mlp& target, const Mlp& source, double tau) {
    if (target.layers.size() != source.layers.size())
        throw std::invalid_argument("polyak_update: architecture mismatch");
    for (std::size_t l = 0; l < target.layers.size(); ++l) {
        Layer& t = target.layers[l];
        const Layer& s = source.layers[l];
        if (t.in != s.in || t.out != s.out)
            throw std::invalid_argument("polyak_update: architecture mismatch");
        for (std::size_t i = 0; i < t.w.size(); ++i)
            t.w[i] = tau * s.w[i] + (1.0 - tau) * t.w[i];
        for (std::size_t i = 0; i < t.b.size(); ++i)
            t.b[i] = tau * s.b[i] + (1.0 - tau) * t.b[i];
    }
}

nlohmann::json save_checkpoint(const Mlp& net) {
    nlohmann::json doc;
    doc["version"] = 1;
    std::vector<int> dims;
    dims.push_back(net.input_dim());
    for (const Layer& l : net.layers) dims.push_back(l.out);
    doc["dims"] = dims;
    std::vector<std::string> acts;
    for (const Layer& l : net.layers) acts.push_back(to_string(l.act));
    doc["activations"] = acts;
    nlohmann::json layers = nlohmann::json::array();
    for (const Layer& l : net.layers) {
        nlohmann::json rows = nlohmann::json::array();
        for (int r = 0; r < l.out; ++r) {
            rows.push_back(std::vector<double>(
                l.w.begin() + static_cast<std::size_t>(r) * l.in,
                l.w.begin() + static_cast<std::size_t>(r + 1) * l.in));
        }
        layers.push_back({{"w", std::move(rows)}, {"b", l.b}});
    }
    doc["layers"] = std::move(layers);
    return doc;
}

Mlp load_checkpoint(const nlohmann::json& doc) {
    try {
        if (doc.at("version").get<int>() != 1)
            throw ConfigError("checkpoint: unsupported version");
        const auto dims = doc.at("dims").get<std::vector<int>>();
        const auto acts = doc.at("activations").get<std::vector<std::string>>();
        const auto& layers = doc.at("layers");
        if (dims.size() < 2 || acts.size() != dims.size() - 1 ||
            layers.size() != dims.size() - 1)
            throw ConfigError("checkpoint: dims/activations/layers are inconsistent");

        Mlp net;
        net.layers.resize(dims.size() - 1);
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            Layer& layer = net.layers[l];
            layer.in = dims[l];
            layer.out = dims[l + 1];
            layer.act = activation_from_name(acts[l]);
            const auto& rows = layers.at(l).at("w");
            if (static_cast<int>(rows.size()) != layer.out)
                throw ConfigError("checkpoint: weight row count does not match dims");
            layer.w.reserve(static_cast<std::size_t>(layer.in) * layer.out);
            for (const auto& row : rows) {
                const auto vals = row.get<std::vector<double>>();
                if (static_cast<int>(vals.size()) != layer.in)
                    throw ConfigError("checkpoint: weight row length does not match dims");
                layer.w.insert(layer.w.end(), vals.begin(), vals.end());
            }
            layer.b = layers.at(l).at("b").get<std::vector<double>>();
            if (static_cast<int>(layer.b.size()) != layer.out)
                throw ConfigError("checkpoint: bias length does not match dims");
        }
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("checkpoint: malformed document: ") + e.what());
    }
}

}  // namespace merge::nn
