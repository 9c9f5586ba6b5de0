#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "oodgen/matrix.hpp"
#include "oodgen/rng.hpp"

namespace oodgen {

enum class Activation { identity, relu, tanh_ };

std::string_view activation_name(Activation a);
Activation activation_from_name(std::string_view name);

/// One affine layer: y = x * weight + bias, followed by the activation.
/// weight is [in x out], bias has length out.
struct MlpLayer {
    DenseMatrix weight;
    std::vector<double> bias;
    Activation act = Activation::identity;

    std::size_t in_dim() const { return weight.rows; }
    std::size_t out_dim() const { return weight.cols; }
};

/// Stack of affine layers with hand-derived forward and backward passes.
/// Backward covers both parameter gradients and input gradients (VJPs); the
/// input gradient can also start from an intermediate layer's output, which
/// is what feature-space scores differentiate through.
class Mlp {
public:
    std::vector<MlpLayer> layers;

    std::size_t input_dim() const { return layers.front().in_dim(); }
    std::size_t output_dim() const { return layers.back().out_dim(); }
    std::size_t layer_count() const { return layers.size(); }

    /// Per-layer pre-activations and post-activations from one forward pass.
    /// post.back() is the network output.
    struct Cache {
        DenseMatrix input;
        std::vector<DenseMatrix> pre;
        std::vector<DenseMatrix> post;
        const DenseMatrix& output() const { return post.back(); }
    };

    struct Gradients {
        std::vector<DenseMatrix> weight;
        std::vector<std::vector<double>> bias;
    };

    Cache forward(const DenseMatrix& x) const;
    DenseMatrix forward_output(const DenseMatrix& x) const { return forward(x).output(); }

    /// d(sum_b upstream[b,:] . output[b,:]) / d(params), summed over the batch.
    Gradients param_grad(const Cache& cache, const DenseMatrix& upstream) const;

    /// Same objective differentiated with respect to the input rows.
    DenseMatrix input_grad(const Cache& cache, const DenseMatrix& upstream) const;

    /// Input gradient with the upstream applied at the post-activation output
    /// of layer `from_layer` (0-based); layers above it are ignored.
    DenseMatrix input_grad_from(const Cache& cache, const DenseMatrix& upstream,
                                std::size_t from_layer) const;

    /// One backward pass producing both parameter and input gradients.
    std::pair<Gradients, DenseMatrix> backward(const Cache& cache,
                                               const DenseMatrix& upstream) const;

    Gradients zero_gradients() const;
    void validate() const;
};

/// Builds an MLP with the given layer widths; acts has one entry per layer
/// (dims.size() - 1 entries). Weights: He init for relu, Xavier otherwise.
Mlp make_mlp(std::span<const std::size_t> dims, std::span<const Activation> acts, Rng& rng);

/// Mean per-epoch training loss, one entry per epoch.
struct TrainLog {
    std::vector<double> epoch_loss;
};

/// SGD with momentum and decoupled-from-nothing weight decay folded into the
/// gradient: v <- momentum*v + g + wd*p; p <- p - lr*v.
class SgdMomentum {
public:
    SgdMomentum(double lr, double momentum, double weight_decay)
        : lr_(lr), momentum_(momentum), weight_decay_(weight_decay) {}

    void step(std::span<double> param, std::span<const double> grad,
              std::vector<double>& velocity) const;

    /// Steps every layer of the net; velocities sized lazily.
    struct MlpState {
        std::vector<std::vector<double>> weight_velocity;
        std::vector<std::vector<double>> bias_velocity;
    };
    void step(Mlp& net, const Mlp::Gradients& grads, MlpState& state) const;

    double lr() const { return lr_; }
    void set_lr(double lr) { lr_ = lr; }
    double momentum() const { return momentum_; }
    double weight_decay() const { return weight_decay_; }

private:
    double lr_;
    double momentum_;
    double weight_decay_;
};

}  // namespace oodgen
