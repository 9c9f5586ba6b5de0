#include "oodgen/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "oodgen/errors.hpp"
#include "oodgen/model_io.hpp"

namespace oodgen {

double NoiseSchedule::sum_alpha() const {
    return std::accumulate(alphas.begin(), alphas.end(), 0.0);
}

NoiseSchedule make_schedule(std::size_t T, double beta1, double betaT) {
    if (T < 1) throw ValueError("make_schedule: T must be >= 1");
    if (!(beta1 > 0.0 && beta1 <= betaT && betaT < 1.0)) {
        throw ValueError("make_schedule: need 0 < beta1 <= betaT < 1");
    }
    NoiseSchedule s;
    s.T = T;
    s.betas.resize(T);
    s.alphas.resize(T);
    s.alpha_bars.resize(T);
    double prod = 1.0;
    for (std::size_t i = 0; i < T; ++i) {
        const double frac = (T == 1) ? 0.0 : static_cast<double>(i) / (T - 1);
        s.betas[i] = beta1 + frac * (betaT - beta1);
        s.alphas[i] = 1.0 - s.betas[i];
        prod *= s.alphas[i];
        s.alpha_bars[i] = prod;
    }
    return s;
}

namespace {

void check_t(std::size_t t, const NoiseSchedule& s, const char* who) {
    if (t < 1 || t > s.T) throw ValueError(std::string(who) + ": t out of range");
}

}  // namespace

DenseMatrix q_sample(const DenseMatrix& x0, std::size_t t, const DenseMatrix& eps,
                     const NoiseSchedule& schedule) {
    check_t(t, schedule, "q_sample");
    check_shape(x0.rows == eps.rows && x0.cols == eps.cols, "q_sample: eps shape mismatch");
    const double abar = schedule.alpha_bar(t);
    const double a = std::sqrt(abar);
    const double b = std::sqrt(1.0 - abar);
    DenseMatrix out(x0.rows, x0.cols);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = a * x0.data[i] + b * eps.data[i];
    }
    return out;
}

void Denoiser::time_embedding(double t, std::span<double> out) const {
    // Standard sinusoidal embedding over the raw step index.
    const std::size_t half = time_dim / 2;
    for (std::size_t j = 0; j < half; ++j) {
        const double freq = std::pow(10000.0, -static_cast<double>(j) / half);
        out[2 * j] = std::sin(t * freq);
        out[2 * j + 1] = std::cos(t * freq);
    }
}

DenseMatrix Denoiser::build_input(const DenseMatrix& x, std::size_t t, int cond) const {
    const std::size_t d = data_dim();
    check_shape(x.cols == d, "denoiser: data dim mismatch");
    if (cond != kNullClass && (cond < 0 || cond >= num_classes)) {
        throw ValueError("denoiser: invalid class id " + std::to_string(cond));
    }
    const std::size_t embed_row = (cond == kNullClass) ? num_classes : cond;
    std::vector<double> temb(time_dim);
    time_embedding(static_cast<double>(t), temb);
    DenseMatrix in(x.rows, d + time_dim + embed_dim());
    for (std::size_t r = 0; r < x.rows; ++r) {
        double* row = in.data.data() + r * in.cols;
        for (std::size_t c = 0; c < d; ++c) row[c] = x(r, c);
        for (std::size_t c = 0; c < time_dim; ++c) row[d + c] = temb[c];
        for (std::size_t c = 0; c < embed_dim(); ++c) {
            row[d + time_dim + c] = class_embed(embed_row, c);
        }
    }
    return in;
}

DenseMatrix Denoiser::epsilon(const DenseMatrix& x, std::size_t t, int cond) const {
    return net.forward_output(build_input(x, t, cond));
}

Denoiser train_denoiser(const LabeledDataset& data, const NoiseSchedule& schedule,
                        const DenoiserTrainConfig& config, TrainLog* log) {
    if (data.size() == 0) throw ValueError("train_denoiser: empty dataset");
    const std::size_t d = data.points.cols;
    Rng rng(config.seed);

    Denoiser den;
    den.time_dim = config.time_dim;
    den.num_classes = data.num_classes;
    const std::size_t in_dim = d + config.time_dim + config.embed_dim;
    const std::size_t dims[] = {in_dim, config.hidden, config.hidden, d};
    const Activation acts[] = {Activation::tanh_, Activation::tanh_, Activation::identity};
    den.net = make_mlp(dims, acts, rng);
    den.class_embed = DenseMatrix(data.num_classes + 1, config.embed_dim);
    const double embed_scale = 1.0 / std::sqrt(static_cast<double>(config.embed_dim));
    for (auto& v : den.class_embed.data) v = embed_scale * rng.gaussian();

    SgdMomentum opt(config.lr, config.momentum, 0.0);
    SgdMomentum::MlpState net_state;
    std::vector<double> embed_velocity;

    const std::size_t n = data.size();
    const std::size_t batch = std::min(config.batch, n);
    const std::size_t steps = (n + batch - 1) / batch;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        // Fisher-Yates shuffle from the seeded stream.
        for (std::size_t i = n; i > 1; --i) {
            std::swap(order[i - 1], order[rng.uniform_index(i)]);
        }
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t step = 0; step < steps; ++step) {
            const std::size_t b0 = step * batch;
            const std::size_t bs = std::min(batch, n - b0);

            DenseMatrix in(bs, den.net.input_dim());
            DenseMatrix target(bs, d);
            std::vector<std::size_t> embed_rows(bs);
            std::vector<double> temb(config.time_dim);
            for (std::size_t r = 0; r < bs; ++r) {
                const std::size_t idx = order[b0 + r];
                const std::size_t t = 1 + rng.uniform_index(schedule.T);
                const double abar = schedule.alpha_bar(t);
                const double ca = std::sqrt(abar);
                const double cb = std::sqrt(1.0 - abar);
                double* row = in.data.data() + r * in.cols;
                for (std::size_t c = 0; c < d; ++c) {
                    const double eps = rng.gaussian();
                    target(r, c) = eps;
                    row[c] = ca * data.points(idx, c) + cb * eps;
                }
                den.time_embedding(static_cast<double>(t), temb);
                for (std::size_t c = 0; c < config.time_dim; ++c) row[d + c] = temb[c];
                const bool drop = rng.uniform() < config.cond_dropout;
                const std::size_t erow =
                    drop ? static_cast<std::size_t>(data.num_classes)
                         : static_cast<std::size_t>(data.labels[idx]);
                embed_rows[r] = erow;
                for (std::size_t c = 0; c < config.embed_dim; ++c) {
                    row[d + config.time_dim + c] = den.class_embed(erow, c);
                }
            }

            auto cache = den.net.forward(in);
            const auto& out = cache.output();
            DenseMatrix upstream(bs, d);
            double loss = 0.0;
            const double inv = 1.0 / static_cast<double>(bs * d);
            for (std::size_t i = 0; i < out.data.size(); ++i) {
                const double diff = out.data[i] - target.data[i];
                loss += diff * diff;
                upstream.data[i] = 2.0 * diff * inv;
            }
            loss *= inv;
            epoch_loss += loss * bs;
            seen += bs;

            auto [grads, input_grad] = den.net.backward(cache, upstream);
            opt.step(den.net, grads, net_state);

            DenseMatrix embed_grad(den.class_embed.rows, den.class_embed.cols);
            for (std::size_t r = 0; r < bs; ++r) {
                for (std::size_t c = 0; c < config.embed_dim; ++c) {
                    embed_grad(embed_rows[r], c) += input_grad(r, d + config.time_dim + c);
                }
            }
            opt.step(std::span<double>(den.class_embed.data),
                     std::span<const double>(embed_grad.data), embed_velocity);
        }
        if (log) log->epoch_loss.push_back(epoch_loss / static_cast<double>(seen));
    }
    return den;
}

CfgEval cfg_epsilon_cached(const Denoiser& d, const DenseMatrix& x_t, int cond, std::size_t t,
                           double beta) {
    CfgEval eval;
    eval.beta = beta;
    eval.conditional = (cond != Denoiser::kNullClass);
    eval.cache_cond = d.net.forward(d.build_input(x_t, t, cond));
    if (!eval.conditional) {
        eval.eps_hat = eval.cache_cond.output();
        return eval;
    }
    eval.cache_null = d.net.forward(d.build_input(x_t, t, Denoiser::kNullClass));
    const auto& ec = eval.cache_cond.output();
    const auto& en = eval.cache_null.output();
    eval.eps_hat = DenseMatrix(ec.rows, ec.cols);
    for (std::size_t i = 0; i < ec.data.size(); ++i) {
        eval.eps_hat.data[i] = (1.0 + beta) * ec.data[i] - beta * en.data[i];
    }
    return eval;
}

DenseMatrix cfg_epsilon(const Denoiser& d, const DenseMatrix& x_t, int cond, std::size_t t,
                        double beta) {
    return cfg_epsilon_cached(d, x_t, cond, t, beta).eps_hat;
}

DenseMatrix cfg_input_vjp(const Denoiser& d, const CfgEval& eval, const DenseMatrix& upstream) {
    const std::size_t dim = d.data_dim();
    auto slice_data_cols = [&](const DenseMatrix& full) {
        DenseMatrix out(full.rows, dim);
        for (std::size_t r = 0; r < full.rows; ++r) {
            for (std::size_t c = 0; c < dim; ++c) out(r, c) = full(r, c);
        }
        return out;
    };
    DenseMatrix g_cond = slice_data_cols(d.net.input_grad(eval.cache_cond, upstream));
    if (!eval.conditional) return g_cond;
    DenseMatrix g_null = slice_data_cols(d.net.input_grad(eval.cache_null, upstream));
    DenseMatrix out(g_cond.rows, g_cond.cols);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = (1.0 + eval.beta) * g_cond.data[i] - eval.beta * g_null.data[i];
    }
    return out;
}

DenseMatrix predict_x0(const DenseMatrix& x_t, std::size_t t, const DenseMatrix& eps_hat,
                       const NoiseSchedule& schedule) {
    check_t(t, schedule, "predict_x0");
    check_shape(x_t.rows == eps_hat.rows && x_t.cols == eps_hat.cols,
                "predict_x0: eps shape mismatch");
    const double abar = schedule.alpha_bar(t);
    const double inv_sqrt = 1.0 / std::sqrt(abar);
    const double noise_coeff = std::sqrt(1.0 - abar);
    DenseMatrix out(x_t.rows, x_t.cols);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = (x_t.data[i] - noise_coeff * eps_hat.data[i]) * inv_sqrt;
    }
    return out;
}

DenseMatrix ddim_step(const DenseMatrix& x_t, const DenseMatrix& x0_t,
                      const DenseMatrix& eps_hat, std::size_t t, double eta, Rng& rng,
                      const NoiseSchedule& schedule) {
    check_t(t, schedule, "ddim_step");
    check_shape(x_t.rows == x0_t.rows && x_t.cols == x0_t.cols &&
                    x_t.rows == eps_hat.rows && x_t.cols == eps_hat.cols,
                "ddim_step: shape mismatch");
    const double abar_t = schedule.alpha_bar(t);
    const double abar_prev = schedule.alpha_bar(t - 1);
    const double sigma =
        eta * std::sqrt((1.0 - abar_prev) / (1.0 - abar_t)) * std::sqrt(1.0 - abar_t / abar_prev);
    const double dir_sq = 1.0 - abar_prev - sigma * sigma;
    if (dir_sq < -1e-12) throw NumericError("ddim_step: sigma exceeds schedule variance");
    const double dir_coeff = std::sqrt(std::max(dir_sq, 0.0)) / std::sqrt(1.0 - abar_t);
    const double mean_coeff = std::sqrt(abar_prev);
    const double sqrt_abar_t = std::sqrt(abar_t);

    DenseMatrix out(x_t.rows, x_t.cols);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = mean_coeff * x0_t.data[i] +
                      dir_coeff * (x_t.data[i] - sqrt_abar_t * x0_t.data[i]);
    }
    if (eta > 0.0) {
        for (auto& v : out.data) v += sigma * rng.gaussian();
    }
    return out;
}

DenseMatrix sample(const Denoiser& d, const NoiseSchedule& schedule, int cond, double beta,
                   double eta, std::size_t n, Rng& rng) {
    DenseMatrix x(n, d.data_dim());
    rng.fill_gaussian(x);
    for (std::size_t t = schedule.T; t >= 1; --t) {
        const DenseMatrix eps_hat = cfg_epsilon(d, x, cond, t, beta);
        const DenseMatrix x0 = predict_x0(x, t, eps_hat, schedule);
        x = ddim_step(x, x0, eps_hat, t, eta, rng, schedule);
    }
    return x;
}

nlohmann::json denoiser_to_json(const Denoiser& d, const NoiseSchedule& schedule) {
    nlohmann::json doc;
    doc["net"] = mlp_to_json(d.net);
    doc["class_embed"] = {{"rows", d.class_embed.rows},
                          {"cols", d.class_embed.cols},
                          {"data", d.class_embed.data}};
    doc["time_dim"] = d.time_dim;
    doc["num_classes"] = d.num_classes;
    doc["schedule"] = {{"T", schedule.T},
                       {"beta1", schedule.betas.front()},
                       {"betaT", schedule.betas.back()}};
    return doc;
}

std::pair<Denoiser, NoiseSchedule> denoiser_from_json(const nlohmann::json& doc) {
    Denoiser d;
    d.net = mlp_from_json(doc.at("net"));
    const auto& ce = doc.at("class_embed");
    d.class_embed = DenseMatrix(ce.at("rows").get<std::size_t>(),
                                ce.at("cols").get<std::size_t>(),
                                ce.at("data").get<std::vector<double>>());
    d.time_dim = doc.at("time_dim").get<std::size_t>();
    d.num_classes = doc.at("num_classes").get<int>();
    const auto& sc = doc.at("schedule");
    NoiseSchedule schedule = make_schedule(sc.at("T").get<std::size_t>(),
                                           sc.at("beta1").get<double>(),
                                           sc.at("betaT").get<double>());
    return {std::move(d), std::move(schedule)};
}

}  // namespace oodgen
