#include "oodgen/mlp.hpp"

#include <cmath>

#include "oodgen/errors.hpp"

namespace oodgen {

namespace {

double activate(Activation a, double v) {
    switch (a) {
        case Activation::identity: return v;
        case Activation::relu: return v > 0.0 ? v : 0.0;
        case Activation::tanh_: return std::tanh(v);
    }
    return v;
}

// Derivative as a function of the pre-activation value.
double activate_deriv(Activation a, double pre) {
    switch (a) {
        case Activation::identity: return 1.0;
        case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
        case Activation::tanh_: {
            const double t = std::tanh(pre);
            return 1.0 - t * t;
        }
    }
    return 1.0;
}

}  // namespace

std::string_view activation_name(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::tanh_: return "tanh";
    }
    return "identity";
}

Activation activation_from_name(std::string_view name) {
    if (name == "identity") return Activation::identity;
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh_;
    throw ValueError("unknown activation: " + std::string(name));
}

void Mlp::validate() const {
    if (layers.empty()) throw ShapeError("Mlp: no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        check_shape(l.bias.size() == l.out_dim(), "Mlp: bias length != layer output dim");
        if (i + 1 < layers.size()) {
            check_shape(l.out_dim() == layers[i + 1].in_dim(),
                        "Mlp: consecutive layer dimensions do not chain");
        }
    }
    if (layers.back().act != Activation::identity) {
        throw ShapeError("Mlp: final layer activation must be identity");
    }
}

Mlp::Cache Mlp::forward(const DenseMatrix& x) const {
    check_shape(x.cols == input_dim(), "mlp forward: input dim mismatch");
    Cache cache;
    cache.input = x;
    cache.pre.reserve(layers.size());
    cache.post.reserve(layers.size());
    const DenseMatrix* cur = &x;
    for (const auto& layer : layers) {
        DenseMatrix pre = matmul(*cur, layer.weight);
        add_row_vector(pre, layer.bias);
        DenseMatrix post = pre;
        if (layer.act != Activation::identity) {
            for (auto& v : post.data) v = activate(layer.act, v);
        }
        cache.pre.push_back(std::move(pre));
        cache.post.push_back(std::move(post));
        cur = &cache.post.back();
    }
    return cache;
}

Mlp::Gradients Mlp::zero_gradients() const {
    Gradients g;
    g.weight.reserve(layers.size());
    g.bias.reserve(layers.size());
    for (const auto& layer : layers) {
        g.weight.emplace_back(layer.in_dim(), layer.out_dim());
        g.bias.emplace_back(layer.out_dim(), 0.0);
    }
    return g;
}

std::pair<Mlp::Gradients, DenseMatrix> Mlp::backward(const Cache& cache,
                                                     const DenseMatrix& upstream) const {
    check_shape(upstream.rows == cache.input.rows && upstream.cols == output_dim(),
                "mlp backward: upstream shape mismatch");
    Gradients grads = zero_gradients();
    DenseMatrix delta = upstream;  // gradient w.r.t. post-activation of current layer
    for (std::size_t li = layers.size(); li-- > 0;) {
        const auto& layer = layers[li];
        // Through the activation: delta_pre = delta_post * act'(pre).
        if (layer.act != Activation::identity) {
            const auto& pre = cache.pre[li];
            for (std::size_t i = 0; i < delta.data.size(); ++i) {
                delta.data[i] *= activate_deriv(layer.act, pre.data[i]);
            }
        }
        const DenseMatrix& layer_input = (li == 0) ? cache.input : cache.post[li - 1];
        grads.weight[li] = matmul_tn(layer_input, delta);
        auto& bias_grad = grads.bias[li];
        for (std::size_t r = 0; r < delta.rows; ++r) {
            const double* row = delta.data.data() + r * delta.cols;
            for (std::size_t c = 0; c < delta.cols; ++c) bias_grad[c] += row[c];
        }
        delta = matmul_nt(delta, layer.weight);
    }
    return {std::move(grads), std::move(delta)};
}

Mlp::Gradients Mlp::param_grad(const Cache& cache, const DenseMatrix& upstream) const {
    return backward(cache, upstream).first;
}

DenseMatrix Mlp::input_grad(const Cache& cache, const DenseMatrix& upstream) const {
    return backward(cache, upstream).second;
}

DenseMatrix Mlp::input_grad_from(const Cache& cache, const DenseMatrix& upstream,
                                 std::size_t from_layer) const {
    check_shape(from_layer < layers.size(), "input_grad_from: layer index out of range");
    check_shape(upstream.rows == cache.input.rows &&
                    upstream.cols == layers[from_layer].out_dim(),
                "input_grad_from: upstream shape mismatch");
    DenseMatrix delta = upstream;
    for (std::size_t li = from_layer + 1; li-- > 0;) {
        const auto& layer = layers[li];
        if (layer.act != Activation::identity) {
            const auto& pre = cache.pre[li];
            for (std::size_t i = 0; i < delta.data.size(); ++i) {
                delta.data[i] *= activate_deriv(layer.act, pre.data[i]);
            }
        }
        delta = matmul_nt(delta, layer.weight);
    }
    return delta;
}

Mlp make_mlp(std::span<const std::size_t> dims, std::span<const Activation> acts, Rng& rng) {
    if (dims.size() < 2) throw ShapeError("make_mlp: need at least one layer");
    check_shape(acts.size() == dims.size() - 1, "make_mlp: one activation per layer");
    Mlp net;
    net.layers.reserve(acts.size());
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        MlpLayer layer;
        layer.weight = DenseMatrix(dims[i], dims[i + 1]);
        layer.bias.assign(dims[i + 1], 0.0);
        layer.act = acts[i];
        const double fan_in = static_cast<double>(dims[i]);
        const double scale = (acts[i] == Activation::relu) ? std::sqrt(2.0 / fan_in)
                                                           : std::sqrt(1.0 / fan_in);
        for (auto& w : layer.weight.data) w = scale * rng.gaussian();
        net.layers.push_back(std::move(layer));
    }
    net.validate();
    return net;
}

void SgdMomentum::step(std::span<double> param, std::span<const double> grad,
                       std::vector<double>& velocity) const {
    check_shape(param.size() == grad.size(), "sgd step: grad shape mismatch");
    if (velocity.empty()) velocity.assign(param.size(), 0.0);
    check_shape(velocity.size() == param.size(), "sgd step: velocity shape mismatch");
    for (std::size_t i = 0; i < param.size(); ++i) {
        velocity[i] = momentum_ * velocity[i] + grad[i] + weight_decay_ * param[i];
        param[i] -= lr_ * velocity[i];
    }
}

void SgdMomentum::step(Mlp& net, const Mlp::Gradients& grads, MlpState& state) const {
    if (state.weight_velocity.empty()) {
        state.weight_velocity.resize(net.layers.size());
        state.bias_velocity.resize(net.layers.size());
    }
    check_shape(grads.weight.size() == net.layers.size(), "sgd step: layer count mismatch");
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        step(std::span<double>(net.layers[li].weight.data),
             std::span<const double>(grads.weight[li].data), state.weight_velocity[li]);
        step(std::span<double>(net.layers[li].bias), std::span<const double>(grads.bias[li]),
             state.bias_velocity[li]);
    }
}

}  // namespace oodgen
