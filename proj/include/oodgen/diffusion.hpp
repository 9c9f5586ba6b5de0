#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "oodgen/dataset.hpp"
#include "oodgen/matrix.hpp"
#include "oodgen/mlp.hpp"
#include "oodgen/rng.hpp"

namespace oodgen {

/// Per-step beta_t, alpha_t = 1 - beta_t and alpha_bar_t = prod_{s<=t} alpha_s.
/// Arrays are 1-indexed through the accessors; alpha_bar(0) == 1 closes the
/// final reverse step.
struct NoiseSchedule {
    std::size_t T = 0;
    std::vector<double> betas;       // [T]
    std::vector<double> alphas;      // [T]
    std::vector<double> alpha_bars;  // [T]

    double beta(std::size_t t) const { return betas[t - 1]; }
    double alpha(std::size_t t) const { return alphas[t - 1]; }
    double alpha_bar(std::size_t t) const { return t == 0 ? 1.0 : alpha_bars[t - 1]; }
    double sum_alpha() const;
};

/// Linear beta interpolation from beta1 to betaT over T steps.
NoiseSchedule make_schedule(std::size_t T, double beta1, double betaT);

/// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.
DenseMatrix q_sample(const DenseMatrix& x0, std::size_t t, const DenseMatrix& eps,
                     const NoiseSchedule& schedule);

/// Conditional noise-prediction network. Input rows are the concatenation of
/// the data coordinates, a sinusoidal time embedding and a learned class
/// embedding; the table's last row is the null token used for classifier-free
/// guidance and condition dropout.
struct Denoiser {
    Mlp net;
    DenseMatrix class_embed;  // (C+1) x embed_dim, last row = null token
    std::size_t time_dim = 16;
    int num_classes = 0;

    static constexpr int kNullClass = -1;

    std::size_t embed_dim() const { return class_embed.cols; }
    std::size_t data_dim() const { return net.output_dim(); }

    void time_embedding(double t, std::span<double> out) const;

    /// Net input for a batch sharing one step t and one condition
    /// (kNullClass selects the null token).
    DenseMatrix build_input(const DenseMatrix& x, std::size_t t, int cond) const;

    /// Raw conditional noise prediction for a shared (t, cond).
    DenseMatrix epsilon(const DenseMatrix& x, std::size_t t, int cond) const;
};

struct DenoiserTrainConfig {
    std::size_t epochs = 80;
    std::size_t batch = 128;
    double lr = 2e-3;
    double momentum = 0.9;
    double cond_dropout = 0.1;
    std::size_t hidden = 128;
    std::size_t time_dim = 16;
    std::size_t embed_dim = 8;
    std::uint64_t seed = 1;
};

/// Noise-prediction training (MSE between drawn and predicted noise) with
/// per-sample condition dropout to the null token.
Denoiser train_denoiser(const LabeledDataset& data, const NoiseSchedule& schedule,
                        const DenoiserTrainConfig& config, TrainLog* log = nullptr);

/// Classifier-free guidance: (1 + beta) eps(x,c,t) - beta eps(x,null,t).
/// cond == kNullClass collapses both terms to the unconditional branch.
DenseMatrix cfg_epsilon(const Denoiser& d, const DenseMatrix& x_t, int cond, std::size_t t,
                        double beta);

/// cfg_epsilon with forward caches retained so the prediction can be
/// back-propagated to x_t.
struct CfgEval {
    DenseMatrix eps_hat;
    Mlp::Cache cache_cond;
    Mlp::Cache cache_null;  // unused when cond is the null class
    double beta = 0.0;
    bool conditional = false;
};
CfgEval cfg_epsilon_cached(const Denoiser& d, const DenseMatrix& x_t, int cond, std::size_t t,
                           double beta);

/// VJP of the guided prediction: d(sum eps_hat . upstream)/d(x_t), restricted
/// to the data coordinates of the net input.
DenseMatrix cfg_input_vjp(const Denoiser& d, const CfgEval& eval, const DenseMatrix& upstream);

/// Tweedie estimate x_{0|t} = (x_t - sqrt(1-abar_t) eps_hat) / sqrt(abar_t).
DenseMatrix predict_x0(const DenseMatrix& x_t, std::size_t t, const DenseMatrix& eps_hat,
                       const NoiseSchedule& schedule);

/// DDIM reverse step; eta scales the stochastic term (eta = 0 deterministic).
/// Consumes Gaussian draws only when eta > 0.
DenseMatrix ddim_step(const DenseMatrix& x_t, const DenseMatrix& x0_t,
                      const DenseMatrix& eps_hat, std::size_t t, double eta, Rng& rng,
                      const NoiseSchedule& schedule);

/// Unguided sampling loop: x_T ~ N(0,I), then ddim_step for t = T..1 with
/// classifier-free guidance strength beta.
DenseMatrix sample(const Denoiser& d, const NoiseSchedule& schedule, int cond, double beta,
                   double eta, std::size_t n, Rng& rng);

nlohmann::json denoiser_to_json(const Denoiser& d, const NoiseSchedule& schedule);
std::pair<Denoiser, NoiseSchedule> denoiser_from_json(const nlohmann::json& doc);

}  // namespace oodgen
